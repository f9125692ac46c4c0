#include "vip/nn/network.hpp"

#include <cmath>

#include "vip/common/error.hpp"
#include "vip/nn/ffnn.hpp"
#include "vip/nn/lstm.hpp"

namespace vip::nn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::MatrixXd sample_keep_mask(Rng& rng, Index rows, Index cols, double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::Config, "dropout rate must be in [0, 1)");
    if (rate == 0.0) return MatrixXd::Ones(rows, cols);
    const double keep = 1.0 - rate;
    const double scale = 1.0 / keep;
    MatrixXd m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.uniform() < keep ? scale : 0.0;
    }
    return m;
}

std::string to_string(NetKind kind) { return kind == NetKind::Lstm ? "lstm" : "ffnn"; }

std::unique_ptr<Classifier> make_classifier(const NetSpec& spec) {
    if (spec.kind == NetKind::Lstm) return std::make_unique<LstmClassifier>(spec);
    return std::make_unique<FfnnClassifier>(spec);
}

MatrixXd softmax_columns(const MatrixXd& logits) {
    MatrixXd p(logits.rows(), logits.cols());
    for (Index j = 0; j < logits.cols(); ++j) {
        const double m = logits.col(j).maxCoeff();
        p.col(j) = (logits.col(j).array() - m).exp().matrix();
        p.col(j) /= p.col(j).sum();
    }
    return p;
}

VectorXd softmax(const VectorXd& logits) { return softmax_columns(logits); }

double cross_entropy(const VectorXd& probs, const VectorXd& one_hot) {
    if (probs.size() != one_hot.size()) throw Error(ErrorCode::ShapeMismatch, "cross-entropy operands");
    double loss = 0.0;
    for (Index k = 0; k < probs.size(); ++k) {
        if (one_hot(k) != 0.0) loss -= one_hot(k) * std::log(probs(k) + kLogEpsilon);
    }
    return loss;
}

double cross_entropy(const VectorXd& probs, int target) { return -std::log(probs(target) + kLogEpsilon); }

double mean_cross_entropy(const MatrixXd& probs, std::span<const int> targets) {
    if (static_cast<Index>(targets.size()) != probs.cols()) throw Error(ErrorCode::ShapeMismatch, "target count");
    double sum = 0.0;
    for (Index j = 0; j < probs.cols(); ++j) sum -= std::log(probs(targets[static_cast<std::size_t>(j)], j) + kLogEpsilon);
    return probs.cols() == 0 ? 0.0 : sum / static_cast<double>(probs.cols());
}

int argmax(const Eigen::Ref<const VectorXd>& v) {
    int best = 0;
    for (Index k = 1; k < v.size(); ++k) {
        if (v(k) > v(best)) best = static_cast<int>(k);
    }
    return best;
}

}  // namespace vip::nn
