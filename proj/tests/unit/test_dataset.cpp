#include <doctest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "vip/common/error.hpp"
#include "vip/scenario/dataset.hpp"

using namespace vip;
using namespace vip::scenario;
namespace fs = std::filesystem;

namespace {

GenConfig small_config(std::size_t n1, std::size_t n11) {
    GenConfig cfg;
    cfg.train = {n1, n11};
    cfg.val = {2, 2};
    cfg.test = {2, 3};
    cfg.export_csv = 2;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

const fs::path& reference_dataset() {
    static const fs::path dir = [] {
        auto d = testing::scratch_dir("ds_ref");
        (void)generate_dataset(small_config(4, 8), 77, d, 1);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("generated splits have the requested layout") {
    const auto& dir = reference_dataset();
    const auto header = read_header(dir);
    CHECK(header.at("seed") == 77);
    const auto train = load_split(dir, "train");
    REQUIRE(train.size() == 12);
    CHECK(train.horizon == 560);
    CHECK(train.num_features == header.at("feature_count").get<std::size_t>());
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(train.cases[c].kind == CaseKind::N1);
        CHECK(train.cases[c].pair == static_cast<std::int64_t>(4 + c));
        CHECK(train.cases[4 + c].pair == static_cast<std::int64_t>(c));
    }
    for (std::size_t c = 4; c < 12; ++c) CHECK(train.cases[c].kind == CaseKind::N11);
    for (std::size_t c = 8; c < 12; ++c) CHECK(train.cases[c].pair == -1);

    for (std::size_t c = 0; c < train.size(); ++c) {
        const auto& r = train.cases[c];
        CHECK(r.t1 == 66);
        for (int t = 1; t < 66; ++t) CHECK(train.label(c, t) == 0);
        if (r.kind == CaseKind::N11) {
            for (int t = 66; t < r.t2; ++t) CHECK(train.label(c, t) == static_cast<int>(r.first_class));
            for (int t = r.t2; t <= 560; ++t) CHECK(train.label(c, t) == static_cast<int>(r.end_class));
        } else {
            for (int t = 66; t <= 560; ++t) CHECK(train.label(c, t) == static_cast<int>(r.end_class));
        }
        CHECK(r.collapsed == (r.t_end < 560));
        for (int t = r.t_end + 1; t <= 560; ++t) {
            const float* s = train.snapshot(c, t);
            for (std::size_t m = 0; m < train.num_features; ++m) CHECK(s[m] == 0.0f);
        }
    }
}

TEST_CASE("pair partners agree before the second contingency") {
    const auto train = load_split(reference_dataset(), "train");
    for (std::size_t c = 0; c < 4; ++c) {
        const auto p = static_cast<std::size_t>(train.cases[c].pair);
        const int t2 = train.cases[p].t2;
        CHECK(train.cases[p].first_class == train.cases[c].end_class);
        CHECK(std::memcmp(train.snapshot(c, 1), train.snapshot(p, 1),
                          static_cast<std::size_t>(t2 - 1) * train.num_features * sizeof(float)) == 0);
    }
}

TEST_CASE("generation is deterministic and independent of workers") {
    const auto other = testing::scratch_dir("ds_w3");
    (void)generate_dataset(small_config(4, 8), 77, other, 3);
    for (const auto& e : fs::directory_iterator(reference_dataset())) {
        if (!e.is_regular_file()) continue;
        CHECK_MESSAGE(slurp(e.path()) == slurp(other / e.path().filename()), e.path().filename().string());
    }
}

TEST_CASE("larger datasets extend smaller ones") {
    const auto big = testing::scratch_dir("ds_big");
    (void)generate_dataset(small_config(6, 10), 77, big, 2);
    const auto a = load_split(reference_dataset(), "train");
    const auto b = load_split(big, "train");
    const std::size_t stride = static_cast<std::size_t>(a.horizon) * a.num_features;
    auto same = [&](std::size_t ca, std::size_t cb) {
        return std::memcmp(a.features.data() + ca * stride, b.features.data() + cb * stride,
                           stride * sizeof(float)) == 0;
    };
    for (std::size_t i = 0; i < 4; ++i) CHECK(same(i, i));
    for (std::size_t i = 0; i < 8; ++i) CHECK(same(4 + i, 6 + i));
}

TEST_CASE("truncated loads keep the prefix") {
    const auto full = load_split(reference_dataset(), "test");
    const auto cut = load_split(reference_dataset(), "test", 180);
    REQUIRE(cut.size() == full.size());
    CHECK(cut.horizon == 180);
    for (std::size_t c = 0; c < cut.size(); ++c) {
        CHECK(std::memcmp(cut.snapshot(c, 1), full.snapshot(c, 1), 180 * cut.num_features * sizeof(float)) == 0);
        CHECK(cut.label(c, 180) == full.label(c, 180));
        CHECK(cut.last_t(c) <= 180);
    }
}

TEST_CASE("exported case CSVs round trip") {
    const auto& dir = reference_dataset();
    const auto header = read_header(dir);
    const auto train = load_split(dir, "train");
    const auto series = read_case_csv(dir / "train_cases" / "case_1.csv");
    CHECK(series.feature_names == header.at("feature_names").get<std::vector<std::string>>());
    CHECK(series.t_end == train.cases[1].t_end);
    REQUIRE(series.labels.size() == static_cast<std::size_t>(series.t_end));
    CHECK(std::memcmp(series.features.data(), train.snapshot(1, 1),
                      series.features.size() * sizeof(float)) == 0);
    for (int t = 1; t <= series.t_end; ++t) CHECK(series.labels[static_cast<std::size_t>(t - 1)] == train.label(1, t));
}

TEST_CASE("malformed case CSVs are rejected") {
    const auto dir = testing::scratch_dir("bad_csv");
    auto expect_config = [](const fs::path& p) {
        try {
            (void)read_case_csv(p);
            FAIL("expected Config");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Config);
        }
    };
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return dir / name;
    };
    expect_config(write("notime.csv", "x,V:B1\n1,1.0\n"));
    expect_config(write("ragged.csv", "t,V:B1,V:B2\n1,1.0\n"));
    expect_config(write("gap.csv", "t,V:B1\n1,1.0\n3,1.0\n"));
    expect_config(write("text.csv", "t,V:B1\n1,abc\n"));
    expect_config(write("label.csv", "t,label,V:B1\n1,9,1.0\n"));
    const auto ok = read_case_csv(write("ok.csv", "t,V:B1\n1,1.0\n2,0.5\n"));
    CHECK(ok.t_end == 2);
    CHECK(ok.labels.empty());
    CHECK(ok.features == std::vector<float>{1.0f, 0.5f});
    try {
        (void)read_case_csv(dir / "absent.csv");
        FAIL("expected Io");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Io);
    }
}

TEST_CASE("config merging rejects unknown keys") {
    GenConfig cfg;
    cfg.merge_json({{"train", {{"n1", 3}}}, {"sim", {{"horizon", 200}}}});
    CHECK(cfg.train.n1 == 3);
    CHECK(cfg.train.n11 == 4000);
    CHECK(cfg.sim.horizon == 200);
    try {
        cfg.merge_json({{"trian", 1}});
        FAIL("expected Config");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Config);
    }
    GenConfig back;
    back.merge_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
}
