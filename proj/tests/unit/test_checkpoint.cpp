#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "vip/common/error.hpp"
#include "vip/nn/checkpoint.hpp"

using namespace vip;
using namespace vip::nn;

namespace {

Checkpoint sample_checkpoint() {
    Checkpoint c;
    c.model_name = "lstm-30";
    c.net = make_classifier({NetKind::Lstm, 3, 4, 2, 5, 30});
    Rng rng(12);
    c.net->initialize(rng);
    c.feature_mean = {0.1, -2.0, 3.5};
    c.feature_std = {1.0, 0.25, 7.0};
    c.seed = 99;
    c.train_config_hash = "abc";
    c.extra = {{"best_epoch", 4}};
    return c;
}

ErrorCode load_error(const std::filesystem::path& dir, std::size_t dim = 0) {
    try {
        (void)load_checkpoint(dir, dim);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Config;
}

}  // namespace

TEST_CASE("checkpoint round trip is exact") {
    const auto dir = testing::scratch_dir("ckpt");
    const auto c = sample_checkpoint();
    save_checkpoint(c, dir);
    const auto d = load_checkpoint(dir, 3);
    CHECK(d.model_name == c.model_name);
    CHECK(d.net->spec() == c.net->spec());
    CHECK(d.net->params() == c.net->params());
    CHECK(d.feature_mean == c.feature_mean);
    CHECK(d.feature_std == c.feature_std);
    CHECK(d.seed == 99);
    CHECK(d.train_config_hash == "abc");
    CHECK(d.extra == c.extra);
}

TEST_CASE("checkpoint problems are reported") {
    const auto dir = testing::scratch_dir("ckpt_bad");
    save_checkpoint(sample_checkpoint(), dir);
    CHECK(load_error(dir, 4) == ErrorCode::DimensionMismatch);
    CHECK(load_error(testing::scratch_dir("ckpt_none")) == ErrorCode::Io);

    {
        std::fstream f(dir / "params.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(17);
        f.put('\x5a');
    }
    CHECK(load_error(dir) == ErrorCode::CorruptCheckpoint);

    save_checkpoint(sample_checkpoint(), dir);
    std::filesystem::resize_file(dir / "params.bin", 40);
    CHECK(load_error(dir) == ErrorCode::CorruptCheckpoint);
}

TEST_CASE("spec json round trip") {
    const NetSpec s{NetKind::Ffnn, 9, 16, 3, 5, 1};
    CHECK(spec_from_json(spec_to_json(s)) == s);
}
