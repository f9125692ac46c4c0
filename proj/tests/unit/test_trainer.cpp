#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "vip/common/error.hpp"
#include "vip/train/trainer.hpp"

using namespace vip;
using namespace vip::train;

namespace {

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.hidden = 4;
    cfg.layers = 1;
    cfg.batch_size = 64;
    cfg.max_epochs = 3;
    cfg.windows_per_case = 6;
    cfg.learning_rate = 1e-2;
    return cfg;
}

}  // namespace

TEST_CASE("window times") {
    const auto t = window_times(TrainConfig{});
    REQUIRE(t.size() == 24);
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(t[k] == 60 + 5 * static_cast<int>(k));
}

TEST_CASE("windows follow the recorded snapshots") {
    auto split = testing::synthetic_split(3, 2, 1);
    const TrainConfig cfg;
    CHECK(make_windows(split, 0, cfg).size() == 24);

    split.cases[1].t_end = 70;
    const auto w = make_windows(split, 1, cfg);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == WindowRef{1, 60});
    CHECK(w[2] == WindowRef{1, 70});

    split.cases[2].t_end = 59;
    try {
        (void)make_windows(split, 2, cfg);
        FAIL("expected CaseTooShort");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CaseTooShort);
    }
    const auto set = build_windows(split, all_cases(split), cfg);
    CHECK(set.windows.size() == 27);
    CHECK(set.skipped_cases == 1);
}

TEST_CASE("model specs") {
    CHECK(spec_for_model("lstm-60", 7).seq_len == 60);
    CHECK(spec_for_model("lstm-30", 7).seq_len == 30);
    const auto f = spec_for_model("ffnn", 7);
    CHECK(f.kind == nn::NetKind::Ffnn);
    CHECK(f.seq_len == 1);
    CHECK(f.hidden == 32);
    CHECK(f.layers == 3);
    CHECK_THROWS_AS((void)spec_for_model("gru", 7), Error);
}

TEST_CASE("early stopping") {
    SUBCASE("decreasing metric stops after the patience runs out") {
        EarlyStopping es(6);
        int epoch = 0;
        for (double m = 1.0; !es.should_stop(); m -= 0.1) {
            es.update(m);
            ++epoch;
        }
        CHECK(epoch == 7);
        CHECK(es.best_epoch() == 1);
    }
    SUBCASE("ties are not improvements") {
        EarlyStopping es(2);
        CHECK(es.update(0.5));
        CHECK_FALSE(es.update(0.5));
        CHECK(es.update(0.6));
        CHECK(es.best_epoch() == 3);
        CHECK_FALSE(es.should_stop());
    }
}

TEST_CASE("normalization statistics") {
    const auto split = testing::synthetic_split(10, 3, 2);
    const std::vector<std::size_t> cases{1, 4, 7};
    const auto norm = compute_normalization(split, cases);
    for (std::size_t m = 0; m < 3; ++m) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (auto c : cases) {
            for (int t = 1; t <= split.last_t(c); ++t) {
                const double v = split.snapshot(c, t)[m];
                sum += v;
                sq += v * v;
                ++n;
            }
        }
        const double mean = sum / static_cast<double>(n);
        CHECK(norm.mean[m] == doctest::Approx(mean));
        CHECK(norm.std[m] == doctest::Approx(std::sqrt(sq / static_cast<double>(n) - mean * mean)));
    }
    auto flat = split;
    for (std::size_t c = 0; c < flat.size(); ++c) {
        for (int t = 1; t <= flat.horizon; ++t) const_cast<float*>(flat.snapshot(c, t))[2] = 3.0f;
    }
    const auto fn = compute_normalization(flat, cases);
    CHECK(fn.mean[2] == doctest::Approx(3.0));
    CHECK(fn.std[2] == 1.0);
}

TEST_CASE("assembled batches are normalized windows") {
    const auto split = testing::synthetic_split(4, 2, 3);
    const auto norm = compute_normalization(split, all_cases(split));
    const std::vector<WindowRef> refs{{0, 60}, {3, 100}};
    const auto batch = assemble_batch(split, norm, refs, 5);
    REQUIRE(batch.length() == 5);
    CHECK(batch.batch() == 2);
    for (std::size_t s = 0; s < 5; ++s) {
        for (std::size_t j = 0; j < 2; ++j) {
            const int t = refs[j].t - 4 + static_cast<int>(s);
            const float* snap = split.snapshot(refs[j].case_index, t);
            for (std::size_t m = 0; m < 2; ++m) {
                CHECK(batch.steps[s](static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) ==
                      doctest::Approx((snap[m] - norm.mean[m]) / norm.std[m]));
            }
        }
    }
}

TEST_CASE("training is deterministic and independent of workers") {
    const auto train = testing::synthetic_split(30, 3, 4);
    const auto val = testing::synthetic_split(10, 3, 5);
    const TrainInput input{&train, all_cases(train), &val, all_cases(val)};
    const auto cfg = tiny_config();
    const auto a = train_model(input, "lstm-30", cfg, 9, 1);
    const auto b = train_model(input, "lstm-30", cfg, 9, 3);
    const auto c = train_model(input, "lstm-30", cfg, 10, 1);
    CHECK(a.checkpoint.net->params() == b.checkpoint.net->params());
    CHECK(a.history.size() == b.history.size());
    CHECK(a.checkpoint.net->params() != c.checkpoint.net->params());
    CHECK(a.train_windows == 180);
    CHECK(a.val_windows == 60);

    const auto norm = compute_normalization(train, all_cases(train));
    CHECK(a.checkpoint.feature_mean == norm.mean);
    CHECK(a.checkpoint.feature_std == norm.std);
}

TEST_CASE("training learns a separable problem") {
    const auto train = testing::synthetic_split(40, 2, 6);
    const auto val = testing::synthetic_split(15, 2, 7);
    auto cfg = tiny_config();
    cfg.max_epochs = 40;
    cfg.patience = 40;
    cfg.dropout = {0.0, 0.0};
    cfg.hidden = 8;
    const auto r = train_model({&train, all_cases(train), &val, all_cases(val)}, "ffnn", cfg, 3);
    CHECK(r.history.back().val_acc > 0.9);
}

TEST_CASE("empty training input") {
    auto train = testing::synthetic_split(3, 2, 1);
    for (auto& c : train.cases) c.t_end = 10;
    const TrainInput input{&train, all_cases(train), &train, all_cases(train)};
    try {
        (void)train_model(input, "ffnn", tiny_config(), 1);
        FAIL("expected EmptyDataset");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyDataset);
    }
}

TEST_CASE("a huge learning rate is reported as divergence") {
    const auto train = testing::synthetic_split(10, 2, 1);
    auto cfg = tiny_config();
    cfg.learning_rate = 1e30;
    cfg.max_epochs = 20;
    try {
        (void)train_model({&train, all_cases(train), &train, all_cases(train)}, "ffnn", cfg, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DivergedLoss);
    }
}

TEST_CASE("one batch can be memorized") {
    const auto split = testing::synthetic_split(32, 4, 8);
    std::vector<WindowRef> refs;
    std::vector<int> y;
    for (std::uint32_t c = 0; c < 32; ++c) {
        refs.push_back({c, 100});
        y.push_back(split.label(c, 100));
    }
    const auto norm = compute_normalization(split, all_cases(split));
    TrainConfig cfg;
    cfg.hidden = 8;
    cfg.layers = 2;
    auto net = nn::make_classifier(spec_for_model("lstm-30", 4, cfg));
    Rng rng(1);
    net->initialize(rng);
    const auto fit = fit_single_batch(*net, assemble_batch(split, norm, refs, 30), y, 500, 1e-2);
    CHECK(fit.accuracy == 1.0);
}

TEST_CASE("config hashing and merging") {
    TrainConfig a, b;
    CHECK(a.hash() == b.hash());
    b.merge_json({{"learning_rate", 0.5}});
    CHECK(b.learning_rate == 0.5);
    CHECK(a.hash() != b.hash());
    CHECK_THROWS_AS(b.merge_json({{"lr", 0.5}}), Error);
    TrainConfig c;
    c.merge_json(b.to_json());
    CHECK(c.hash() == b.hash());
}
