#include "vip/nn/ffnn.hpp"

#include <cmath>

#include "vip/common/error.hpp"

namespace vip::nn {

using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

FfnnClassifier::FfnnClassifier(const NetSpec& spec) : spec_(spec) {
    if (spec.layers == 0 || spec.hidden == 0 || spec.classes == 0 || spec.input_dim == 0) {
        throw Error(ErrorCode::ShapeMismatch, "degenerate feed-forward spec");
    }
    spec_.kind = NetKind::Ffnn;
    spec_.seq_len = 1;
    std::size_t off = 0;
    for (std::size_t l = 0; l < spec_.layers; ++l) {
        w_off_.push_back(off);
        off += spec_.hidden * layer_input(l);
        b_off_.push_back(off);
        off += spec_.hidden;
    }
    head_w_ = off;
    off += spec_.classes * spec_.hidden;
    head_b_ = off;
    off += spec_.classes;
    total_ = off;
    params_ = VectorXd::Zero(static_cast<Index>(total_));
}

std::unique_ptr<ForwardCache> FfnnClassifier::forward(const SequenceBatch& x, const DropoutMasks* masks) const {
    if (x.length() != 1) throw Error(ErrorCode::SequenceLengthMismatch, "feed-forward net takes one snapshot");
    if (x.features() != static_cast<Index>(spec_.input_dim)) throw Error(ErrorCode::ShapeMismatch, "snapshot features");
    const bool masked = masks != nullptr && !masks->input.empty();
    if (masked && masks->input.size() != spec_.layers) throw Error(ErrorCode::ShapeMismatch, "dropout mask layers");
    const auto h = static_cast<Index>(spec_.hidden);

    auto cache = std::make_unique<Cache>();
    if (masked) cache->masks = *masks;
    const MatrixXd* a = &x.steps.front();
    for (std::size_t l = 0; l < spec_.layers; ++l) {
        const Map<const MatrixXd> w(params_.data() + w_off_[l], h, static_cast<Index>(layer_input(l)));
        const Map<const VectorXd> b(params_.data() + b_off_[l], h);
        cache->inputs.push_back(masked ? a->cwiseProduct(masks->input[l]) : *a);
        MatrixXd z = w * cache->inputs.back();
        z.colwise() += b;
        cache->activations.push_back(z.array().tanh().matrix());
        a = &cache->activations.back();
    }
    const Map<const MatrixXd> head_w(params_.data() + head_w_, static_cast<Index>(spec_.classes), h);
    const Map<const VectorXd> head_b(params_.data() + head_b_, static_cast<Index>(spec_.classes));
    cache->logits = head_w * *a;
    cache->logits.colwise() += head_b;
    cache->probs = softmax_columns(cache->logits);
    return cache;
}

void FfnnClassifier::backward(const ForwardCache& base, std::span<const int> targets, VectorXd& grad) const {
    const auto* cache = dynamic_cast<const Cache*>(&base);
    if (cache == nullptr || cache->activations.size() != spec_.layers) {
        throw Error(ErrorCode::MissingCache, "feed-forward backward needs the cache of a feed-forward forward");
    }
    const Index batch = cache->probs.cols();
    if (static_cast<Index>(targets.size()) != batch) throw Error(ErrorCode::ShapeMismatch, "target count");
    const auto h = static_cast<Index>(spec_.hidden);
    const auto k = static_cast<Index>(spec_.classes);
    const bool masked = !cache->masks.input.empty();

    grad = VectorXd::Zero(static_cast<Index>(total_));
    MatrixXd dlogits = cache->probs;
    for (Index j = 0; j < batch; ++j) dlogits(targets[static_cast<std::size_t>(j)], j) -= 1.0;
    dlogits /= static_cast<double>(batch);
    Map<MatrixXd>(grad.data() + head_w_, k, h).noalias() = dlogits * cache->activations.back().transpose();
    Map<VectorXd>(grad.data() + head_b_, k) = dlogits.rowwise().sum();
    MatrixXd da = Map<const MatrixXd>(params_.data() + head_w_, k, h).transpose() * dlogits;
    for (std::size_t l = spec_.layers; l-- > 0;) {
        const auto in = static_cast<Index>(layer_input(l));
        const auto& act = cache->activations[l];
        const MatrixXd dz = (da.array() * (1.0 - act.array().square())).matrix();
        Map<MatrixXd>(grad.data() + w_off_[l], h, in).noalias() = dz * cache->inputs[l].transpose();
        Map<VectorXd>(grad.data() + b_off_[l], h) = dz.rowwise().sum();
        if (l > 0) {
            da.noalias() = Map<const MatrixXd>(params_.data() + w_off_[l], h, in).transpose() * dz;
            if (masked) da.array() *= cache->masks.input[l].array();
        }
    }
}

DropoutMasks FfnnClassifier::sample_masks(Rng& rng, Index batch, const DropoutRates& rates) const {
    DropoutMasks m;
    for (std::size_t l = 0; l < spec_.layers; ++l) {
        m.input.push_back(sample_keep_mask(rng, static_cast<Index>(layer_input(l)), batch, rates.input));
    }
    return m;
}

void FfnnClassifier::initialize(Rng& rng) {
    params_.setZero();
    auto fill = [&](std::size_t offset, std::size_t count, double fan_in, double fan_out) {
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        for (std::size_t q = 0; q < count; ++q) params_(static_cast<Index>(offset + q)) = rng.uniform(-s, s);
    };
    for (std::size_t l = 0; l < spec_.layers; ++l) {
        fill(w_off_[l], spec_.hidden * layer_input(l), static_cast<double>(layer_input(l)),
             static_cast<double>(spec_.hidden));
    }
    fill(head_w_, spec_.classes * spec_.hidden, static_cast<double>(spec_.hidden), static_cast<double>(spec_.classes));
}

std::unique_ptr<Classifier> FfnnClassifier::clone() const { return std::make_unique<FfnnClassifier>(*this); }

}  // namespace vip::nn
