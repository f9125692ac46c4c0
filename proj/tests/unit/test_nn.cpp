#include <doctest.h>

#include <cmath>

#include "vip/common/error.hpp"
#include "vip/nn/adam.hpp"
#include "vip/nn/ffnn.hpp"
#include "vip/nn/gradient_check.hpp"
#include "vip/nn/lstm.hpp"

using namespace vip;
using namespace vip::nn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

NetSpec lstm_spec(std::size_t in, std::size_t hidden, std::size_t layers, std::size_t seq) {
    return {NetKind::Lstm, in, hidden, layers, 5, seq};
}

SequenceBatch random_batch(Rng& rng, std::size_t seq, Eigen::Index in, Eigen::Index batch) {
    SequenceBatch x;
    for (std::size_t s = 0; s < seq; ++s) {
        MatrixXd m(in, batch);
        for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = rng.uniform(-1.0, 1.0);
        x.steps.push_back(m);
    }
    return x;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("single LSTM cell against scalar arithmetic") {
    const double w = 1.0, u = 1.0, b = 0.0, x = 1.0, h_prev = 0.0, c_prev = 1.0;
    const double z = w * x + u * h_prev + b;
    const double gate = sigmoid(z);
    const double cand = std::tanh(z);
    const double c_expected = gate * c_prev + gate * cand;
    const double h_expected = gate * std::tanh(c_expected);
    CHECK(c_expected == doctest::Approx(1.2878285197759447).epsilon(1e-15));

    const VectorXd wv = VectorXd::Ones(4), uv = VectorXd::Ones(4), bv = VectorXd::Zero(4);
    const LstmLayerView view{Eigen::Map<const MatrixXd>(wv.data(), 4, 1), Eigen::Map<const MatrixXd>(uv.data(), 4, 1),
                             Eigen::Map<const VectorXd>(bv.data(), 4)};
    const auto s = lstm_block_forward(view, MatrixXd::Constant(1, 1, x), MatrixXd::Constant(1, 1, h_prev),
                                      MatrixXd::Constant(1, 1, c_prev));
    CHECK(std::abs(s.c(0, 0) - c_expected) < 1e-12);
    CHECK(std::abs(s.h(0, 0) - h_expected) < 1e-12);
    CHECK(std::abs(s.gates(0, 0) - 0.7310585786300049) < 1e-12);
    CHECK(std::abs(s.gates(2, 0) - 0.7615941559557649) < 1e-12);
}

TEST_CASE("zero weights pin the gates at one half") {
    const VectorXd zeros = VectorXd::Zero(12);
    const LstmLayerView view{Eigen::Map<const MatrixXd>(zeros.data(), 12, 0),
                             Eigen::Map<const MatrixXd>(zeros.data(), 12, 3), Eigen::Map<const VectorXd>(zeros.data(), 12)};
    MatrixXd c0(3, 1);
    c0 << 0.4, -1.2, 2.0;
    const auto s = lstm_block_forward(view, MatrixXd(0, 1), MatrixXd::Zero(3, 1), c0);
    for (int k = 0; k < 3; ++k) {
        CHECK(s.c(k, 0) == doctest::Approx(0.5 * c0(k, 0)));
        CHECK(s.h(k, 0) == doctest::Approx(0.5 * std::tanh(0.5 * c0(k, 0))));
    }
}

TEST_CASE("mismatched block inputs are rejected") {
    const VectorXd p = VectorXd::Zero(8);
    const LstmLayerView view{Eigen::Map<const MatrixXd>(p.data(), 4, 1), Eigen::Map<const MatrixXd>(p.data(), 4, 1),
                             Eigen::Map<const VectorXd>(p.data(), 4)};
    CHECK_THROWS_AS((void)lstm_block_forward(view, MatrixXd::Zero(2, 1), MatrixXd::Zero(1, 1), MatrixXd::Zero(1, 1)),
                    Error);
}

TEST_CASE("zero-parameter networks are uniform") {
    Rng rng(1);
    for (const auto& spec : {lstm_spec(4, 3, 2, 5), NetSpec{NetKind::Ffnn, 4, 3, 3, 5, 1}}) {
        const auto net = make_classifier(spec);
        const auto x = random_batch(rng, spec.seq_len, 4, 3);
        const auto out = net->forward(x, nullptr);
        for (Eigen::Index j = 0; j < out->probs.size(); ++j) CHECK(out->probs.data()[j] == doctest::Approx(0.2));

        const std::vector<int> targets{0, 3, 4};
        VectorXd grad;
        net->backward(*out, targets, grad);
        const std::size_t hb = spec.kind == NetKind::Lstm ? dynamic_cast<const LstmClassifier&>(*net).head_b_offset()
                                                          : net->param_count() - 5;
        for (int k = 0; k < 5; ++k) {
            double expected = 0.0;
            for (int t : targets) expected += 0.2 - (t == k ? 1.0 : 0.0);
            CHECK(grad(static_cast<Eigen::Index>(hb) + k) == doctest::Approx(expected / 3.0));
        }
    }
}

TEST_CASE("softmax and cross-entropy closed forms") {
    VectorXd z(2);
    z << 0.0, std::log(2.0);
    const auto p = softmax(z);
    CHECK(p(0) == doctest::Approx(1.0 / 3.0));
    CHECK(p(1) == doctest::Approx(2.0 / 3.0));

    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        VectorXd l(5);
        for (int k = 0; k < 5; ++k) l(k) = rng.uniform(-30.0, 30.0);
        const auto a = softmax(l);
        const auto b = softmax((l.array() + 17.0).matrix());
        CHECK(std::abs(a.sum() - 1.0) < 1e-9);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(cross_entropy(a, static_cast<int>(trial % 5)) >= 0.0);
    }
    CHECK(softmax(VectorXd::Constant(4, 1e3)).isApprox(VectorXd::Constant(4, 0.25)));
    CHECK(cross_entropy(VectorXd::Constant(5, 0.2), 2) == doctest::Approx(std::log(5.0)));
    VectorXd one_hot = VectorXd::Zero(5);
    one_hot(1) = 1.0;
    CHECK(cross_entropy(one_hot, one_hot) < 1e-11);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    VectorXd v(4);
    v << 0.1, 0.4, 0.4, 0.1;
    CHECK(argmax(v) == 1);
}

TEST_CASE("dropout keep fraction concentrates at one half") {
    Rng rng(8);
    const MatrixXd m = sample_keep_mask(rng, 1000, 1000, 0.5);
    const double kept = static_cast<double>((m.array() > 0.0).count()) / 1e6;
    CHECK(kept >= 0.498);
    CHECK(kept <= 0.502);
    CHECK(((m.array() == 0.0) || (m.array() == 2.0)).all());
    CHECK((sample_keep_mask(rng, 7, 3, 0.0).array() == 1.0).all());
}

TEST_CASE("forward is pure and remembers the first step") {
    Rng rng(21);
    auto net = make_classifier(lstm_spec(3, 4, 2, 60));
    net->initialize(rng);
    auto x = random_batch(rng, 60, 3, 1);
    const MatrixXd a = net->forward(x, nullptr)->probs;
    CHECK(net->forward(x, nullptr)->probs == a);
    x.steps[0].array() += 3.0;
    const MatrixXd b = net->forward(x, nullptr)->probs;
    CHECK((a - b).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gate activations stay in range") {
    Rng rng(4);
    LstmClassifier net(lstm_spec(3, 4, 2, 8));
    net.initialize(rng);
    net.params() *= 5.0;
    auto x = random_batch(rng, 8, 3, 4);
    for (auto& s : x.steps) s *= 10.0;
    const auto out = net.forward(x, nullptr);
    const auto& cache = dynamic_cast<const LstmClassifier::Cache&>(*out);
    for (const auto& layer : cache.steps) {
        for (const auto& st : layer) {
            CHECK((st.gates.array() >= -1.0).all());
            CHECK((st.gates.array() <= 1.0).all());
            CHECK((st.gates.topRows(8).array() >= 0.0).all());
            CHECK((st.gates.bottomRows(4).array() >= 0.0).all());
            CHECK((st.h.array().abs() <= 1.0).all());
        }
    }
}

TEST_CASE("backward matches finite differences") {
    SUBCASE("lstm") {
        const auto r = gradient_check(lstm_spec(6, 4, 2, 5), 3, 17);
        CHECK(r.parameters_checked > 0);
        CHECK(r.max_relative_error <= 1e-4);
    }
    SUBCASE("lstm without dropout") {
        CHECK(gradient_check(lstm_spec(3, 2, 1, 4), 3, 5, 1e-5, 3, false).max_relative_error <= 1e-4);
    }
    SUBCASE("ffnn") {
        CHECK(gradient_check(NetSpec{NetKind::Ffnn, 6, 4, 2, 5, 1}, 3, 17).max_relative_error <= 1e-4);
    }
}

TEST_CASE("backward is pure and needs a matching cache") {
    Rng rng(2);
    auto net = make_classifier(lstm_spec(3, 3, 2, 4));
    net->initialize(rng);
    const auto x = random_batch(rng, 4, 3, 2);
    const auto cache = net->forward(x, nullptr);
    const std::vector<int> y{1, 2};
    VectorXd g1, g2;
    net->backward(*cache, y, g1);
    net->backward(*cache, y, g2);
    CHECK(g1 == g2);

    FfnnClassifier ffnn(NetSpec{NetKind::Ffnn, 3, 3, 2, 5, 1});
    try {
        ffnn.backward(*cache, y, g1);
        FAIL("expected MissingCache");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingCache);
    }
    CHECK_THROWS_AS((void)net->forward(random_batch(rng, 5, 3, 2), nullptr), Error);
}

TEST_CASE("adam closed-form steps") {
    VectorXd p(3);
    p << 1.0, -2.0, 0.5;
    const VectorXd start = p;
    auto st = AdamState::zeros(3);
    adam_step(p, VectorXd::Zero(3), st);
    CHECK(p == start);
    CHECK(st.step == 1);

    VectorXd g(3);
    g << 0.3, -7.0, 1e-3;
    auto fresh = AdamState::zeros(3);
    VectorXd q = start;
    adam_step(q, g, fresh);
    for (int k = 0; k < 3; ++k) {
        const double expected = start(k) - 1e-4 * (g(k) > 0 ? 1.0 : -1.0);
        CHECK(std::abs(q(k) - expected) <= 1e-4 * 1e-3);
    }

    VectorXd a = start, b = start;
    auto sa = AdamState::zeros(3), sb = AdamState::zeros(3);
    Rng rng(6);
    for (int i = 0; i < 20; ++i) {
        VectorXd gi(3);
        for (int k = 0; k < 3; ++k) gi(k) = rng.uniform(-1.0, 1.0);
        adam_step(a, gi, sa);
        adam_step(b, gi, sb);
    }
    CHECK(a == b);
    CHECK_THROWS_AS(adam_step(a, VectorXd::Zero(2), sa), Error);
}
