#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vip/eval/evaluator.hpp"

using namespace vip;
using namespace vip::eval;
using vip::scenario::CaseKind;

namespace {

SplitPrediction oracle_prediction(const scenario::SplitData& split, const std::vector<std::size_t>& cases) {
    SplitPrediction p;
    p.cases = cases;
    for (auto c : cases) {
        CasePrediction cp;
        for (int t = kFirstPrediction; t <= split.last_t(c); ++t) cp.classes.push_back(split.label(c, t));
        cp.probs = Eigen::MatrixXd::Zero(5, static_cast<Eigen::Index>(cp.classes.size()));
        p.per_case.push_back(cp);
    }
    return p;
}

nn::Checkpoint zero_checkpoint(std::size_t features) {
    nn::Checkpoint c;
    c.model_name = "lstm-60";
    c.net = nn::make_classifier(train::spec_for_model("lstm-60", features));
    c.feature_mean.assign(features, 0.0);
    c.feature_std.assign(features, 1.0);
    return c;
}

}  // namespace

TEST_CASE("a perfect predictor scores one everywhere") {
    const auto split = testing::synthetic_split(20, 2, 1);
    const auto cases = train::all_cases(split);
    const auto pred = oracle_prediction(split, cases);
    const auto curve = accuracy_over_time(pred, split);
    REQUIRE(curve.accuracy.size() == 121);
    for (int t = 0; t <= kMaxT; ++t) {
        CHECK(curve.accuracy[static_cast<std::size_t>(t)] == 1.0);
        CHECK(curve.count[static_cast<std::size_t>(t)] == 20);
    }
    CHECK(curve.mean(36, 120) == 1.0);

    const auto table = confusion_at(pred, split, 50);
    CHECK(table.total() == 20);
    CHECK(table.accuracy() == 1.0);
    for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t b = 0; b < 5; ++b) {
            if (a != b) CHECK(table.counts[a][b] == 0);
        }
        CHECK(table.recall(a) == 1.0);
    }
    CHECK(pre_contingency_accuracy(pred, split) == 1.0);
}

TEST_CASE("confusion marginals") {
    eval::ConfusionTable t;
    t.counts[0] = {5, 1, 0, 0, 0};
    t.counts[2] = {0, 0, 3, 1, 0};
    t.counts[4] = {2, 0, 0, 0, 8};
    CHECK(t.total() == 20);
    CHECK(t.row_sum(0) == 6);
    CHECK(t.col_sum(0) == 7);
    CHECK(t.accuracy() == doctest::Approx(16.0 / 20.0));
    CHECK(t.recall(4) == doctest::Approx(0.8));
    CHECK(t.precision(0) == doctest::Approx(5.0 / 7.0));
    CHECK(std::isnan(t.recall(1)));
}

TEST_CASE("majority baseline from label histograms") {
    const auto split = testing::synthetic_split(25, 2, 2);
    const auto cases = train::all_cases(split);
    for (int k = 0; k < 5; ++k) {
        const auto curve = majority_curve(split, cases, k);
        for (int big_t = 0; big_t <= kMaxT; ++big_t) {
            const int t = big_t + kFirstPrediction;
            std::size_t hits = 0;
            for (auto c : cases) hits += split.label(c, t) == k ? 1 : 0;
            CHECK(curve.accuracy[static_cast<std::size_t>(big_t)] == doctest::Approx(hits / 25.0));
        }
    }
    const std::vector<train::WindowRef> windows{{0, 70}, {1, 70}, {1, 61}, {2, 70}, {7, 70}};
    // labels at these windows: 0, 1, 0, 0 (N-1-1 before t2), 2
    CHECK(majority_class(split, windows) == 0);
    const auto constant = curve_from_predictor(split, cases, [](std::size_t, int) { return 3; });
    CHECK(constant.accuracy == majority_curve(split, cases, 3).accuracy);
}

TEST_CASE("rolling prediction covers t from 60 to the last snapshot") {
    const auto ckpt = zero_checkpoint(3);
    std::vector<float> features(100 * 3, 0.5f);
    const auto p = rolling_predict(ckpt, features, 100);
    CHECK(p.first_t == 60);
    CHECK(p.probs.cols() == 41);
    CHECK(p.classes.size() == 41);
    CHECK((p.probs.array() - 0.2).abs().maxCoeff() < 1e-12);
    CHECK(rolling_predict(ckpt, std::vector<float>(59 * 3, 0.0f), 59).classes.empty());
}

TEST_CASE("memory onsets of an untrained window model") {
    auto split = testing::synthetic_split(6, 2, 3);
    auto ckpt = zero_checkpoint(2);
    Rng rng(4);
    ckpt.net->initialize(rng);
    const auto onsets = memory_onsets(ckpt, split, cases_of_kind(split, CaseKind::N11));
    REQUIRE(onsets.size() == 2);
    for (const auto& o : onsets) {
        CHECK(o.t2 == 80);
        CHECK(o.onset_t == o.t2 + 59);
    }
}

TEST_CASE("cases by kind") {
    const auto split = testing::synthetic_split(9, 2, 1);
    CHECK(cases_of_kind(split, CaseKind::N11) == std::vector<std::size_t>{2, 5, 8});
    CHECK(cases_of_kind(split, CaseKind::N1).size() == 6);
}
