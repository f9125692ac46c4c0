#include "vip/nn/lstm.hpp"

#include <cmath>

#include "vip/common/error.hpp"

namespace vip::nn {

using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void sigmoid_inplace(Eigen::Block<MatrixXd> z) { z = (1.0 + (-z.array()).exp()).inverse().matrix(); }

}  // namespace

LstmStepCache lstm_block_forward(const LstmLayerView& p, const MatrixXd& x, const MatrixXd& h_prev,
                                 const MatrixXd& c_prev) {
    const Index n = p.u.cols();
    if (p.w.cols() != x.rows() || p.u.rows() != 4 * n || h_prev.rows() != n || c_prev.rows() != n ||
        h_prev.cols() != x.cols() || c_prev.cols() != x.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "lstm block inputs");
    }
    LstmStepCache s;
    s.x = x;
    s.h_prev = h_prev;
    s.c_prev = c_prev;
    s.gates.noalias() = p.w * x;
    s.gates.noalias() += p.u * h_prev;
    s.gates.colwise() += p.b;
    sigmoid_inplace(s.gates.topRows(2 * n));  // f, i
    s.gates.middleRows(2 * n, n) = s.gates.middleRows(2 * n, n).array().tanh().matrix();
    sigmoid_inplace(s.gates.bottomRows(n));  // o
    const auto f = s.gates.topRows(n).array();
    const auto i = s.gates.middleRows(n, n).array();
    const auto g = s.gates.middleRows(2 * n, n).array();
    const auto o = s.gates.bottomRows(n).array();
    s.c = (f * c_prev.array() + i * g).matrix();
    s.tanh_c = s.c.array().tanh().matrix();
    s.h = (o * s.tanh_c.array()).matrix();
    return s;
}

LstmClassifier::LstmClassifier(const NetSpec& spec) : spec_(spec) {
    if (spec.layers == 0 || spec.hidden == 0 || spec.classes == 0 || spec.input_dim == 0 || spec.seq_len == 0) {
        throw Error(ErrorCode::ShapeMismatch, "degenerate LSTM spec");
    }
    spec_.kind = NetKind::Lstm;
    std::size_t off = 0;
    const std::size_t n = spec.hidden;
    for (std::size_t l = 0; l < spec.layers; ++l) {
        Offsets o{};
        o.w = off;
        off += 4 * n * layer_input(l);
        o.u = off;
        off += 4 * n * n;
        o.b = off;
        off += 4 * n;
        offsets_.push_back(o);
    }
    head_w_ = off;
    off += spec.classes * n;
    head_b_ = off;
    off += spec.classes;
    total_ = off;
    params_ = VectorXd::Zero(static_cast<Index>(total_));
}

LstmLayerView LstmClassifier::layer(std::size_t l) const {
    const auto n = static_cast<Index>(spec_.hidden);
    const auto& o = offsets_.at(l);
    return {Map<const MatrixXd>(params_.data() + o.w, 4 * n, static_cast<Index>(layer_input(l))),
            Map<const MatrixXd>(params_.data() + o.u, 4 * n, n), Map<const VectorXd>(params_.data() + o.b, 4 * n)};
}

std::unique_ptr<ForwardCache> LstmClassifier::forward(const SequenceBatch& x, const DropoutMasks* masks) const {
    if (x.length() != spec_.seq_len) throw Error(ErrorCode::SequenceLengthMismatch, "window length");
    const Index batch = x.batch();
    const auto n = static_cast<Index>(spec_.hidden);
    for (const auto& s : x.steps) {
        if (s.rows() != static_cast<Index>(spec_.input_dim) || s.cols() != batch) {
            throw Error(ErrorCode::ShapeMismatch, "window features");
        }
    }
    const bool masked = masks != nullptr && !masks->empty();
    if (masked && (masks->input.size() != spec_.layers || masks->recurrent.size() != spec_.layers)) {
        throw Error(ErrorCode::ShapeMismatch, "dropout mask layers");
    }

    auto cache = std::make_unique<Cache>();
    if (masked) cache->masks = *masks;
    cache->steps.assign(spec_.layers, std::vector<LstmStepCache>(spec_.seq_len));
    std::vector<MatrixXd> h(spec_.layers, MatrixXd::Zero(n, batch));
    std::vector<MatrixXd> c(spec_.layers, MatrixXd::Zero(n, batch));
    for (std::size_t t = 0; t < spec_.seq_len; ++t) {
        const MatrixXd* input = &x.steps[t];
        for (std::size_t l = 0; l < spec_.layers; ++l) {
            auto& st = cache->steps[l][t];
            if (masked) {
                st = lstm_block_forward(layer(l), input->cwiseProduct(masks->input[l]),
                                        h[l].cwiseProduct(masks->recurrent[l]), c[l]);
            } else {
                st = lstm_block_forward(layer(l), *input, h[l], c[l]);
            }
            h[l] = st.h;
            c[l] = st.c;
            input = &st.h;
        }
    }
    const Map<const MatrixXd> head_w(params_.data() + head_w_, static_cast<Index>(spec_.classes), n);
    const Map<const VectorXd> head_b(params_.data() + head_b_, static_cast<Index>(spec_.classes));
    cache->logits = head_w * h.back();
    cache->logits.colwise() += head_b;
    cache->probs = softmax_columns(cache->logits);
    return cache;
}

void LstmClassifier::backward(const ForwardCache& base, std::span<const int> targets, VectorXd& grad) const {
    const auto* cache = dynamic_cast<const Cache*>(&base);
    if (cache == nullptr || cache->steps.size() != spec_.layers || cache->steps.front().size() != spec_.seq_len) {
        throw Error(ErrorCode::MissingCache, "LSTM backward needs the cache of an LSTM forward");
    }
    const Index batch = cache->probs.cols();
    if (static_cast<Index>(targets.size()) != batch) throw Error(ErrorCode::ShapeMismatch, "target count");
    const auto n = static_cast<Index>(spec_.hidden);
    const auto k = static_cast<Index>(spec_.classes);
    const bool masked = !cache->masks.empty();

    grad = VectorXd::Zero(static_cast<Index>(total_));
    MatrixXd dlogits = cache->probs;
    for (Index j = 0; j < batch; ++j) dlogits(targets[static_cast<std::size_t>(j)], j) -= 1.0;
    dlogits /= static_cast<double>(batch);

    const auto& h_top = cache->steps.back().back().h;
    Map<MatrixXd>(grad.data() + head_w_, k, n).noalias() = dlogits * h_top.transpose();
    Map<VectorXd>(grad.data() + head_b_, k) = dlogits.rowwise().sum();
    const Map<const MatrixXd> head_w(params_.data() + head_w_, k, n);

    std::vector<MatrixXd> dh_next(spec_.layers, MatrixXd::Zero(n, batch));
    std::vector<MatrixXd> dc_next(spec_.layers, MatrixXd::Zero(n, batch));
    MatrixXd dz(4 * n, batch);
    MatrixXd dx_from_above;
    for (std::size_t tt = spec_.seq_len; tt-- > 0;) {
        for (std::size_t l = spec_.layers; l-- > 0;) {
            const auto& st = cache->steps[l][tt];
            MatrixXd dh = dh_next[l];
            if (l + 1 == spec_.layers) {
                if (tt + 1 == spec_.seq_len) dh.noalias() += head_w.transpose() * dlogits;
            } else {
                dh += dx_from_above;
            }
            const auto f = st.gates.topRows(n).array();
            const auto i = st.gates.middleRows(n, n).array();
            const auto g = st.gates.middleRows(2 * n, n).array();
            const auto o = st.gates.bottomRows(n).array();
            const auto tc = st.tanh_c.array();
            const Eigen::ArrayXXd dc = dc_next[l].array() + dh.array() * o * (1.0 - tc * tc);
            dz.topRows(n) = (dc * st.c_prev.array() * f * (1.0 - f)).matrix();
            dz.middleRows(n, n) = (dc * g * i * (1.0 - i)).matrix();
            dz.middleRows(2 * n, n) = (dc * i * (1.0 - g * g)).matrix();
            dz.bottomRows(n) = (dh.array() * tc * o * (1.0 - o)).matrix();
            dc_next[l] = (dc * f).matrix();

            const auto& off = offsets_[l];
            const auto in = static_cast<Index>(layer_input(l));
            Map<MatrixXd>(grad.data() + off.w, 4 * n, in).noalias() += dz * st.x.transpose();
            Map<MatrixXd>(grad.data() + off.u, 4 * n, n).noalias() += dz * st.h_prev.transpose();
            Map<VectorXd>(grad.data() + off.b, 4 * n) += dz.rowwise().sum();

            const auto view = layer(l);
            dh_next[l].noalias() = view.u.transpose() * dz;
            if (masked) dh_next[l].array() *= cache->masks.recurrent[l].array();
            if (l > 0) {
                dx_from_above.noalias() = view.w.transpose() * dz;
                if (masked) dx_from_above.array() *= cache->masks.input[l].array();
            }
        }
    }
}

DropoutMasks LstmClassifier::sample_masks(Rng& rng, Index batch, const DropoutRates& rates) const {
    DropoutMasks m;
    for (std::size_t l = 0; l < spec_.layers; ++l) {
        m.input.push_back(sample_keep_mask(rng, static_cast<Index>(layer_input(l)), batch, rates.input));
        m.recurrent.push_back(sample_keep_mask(rng, static_cast<Index>(spec_.hidden), batch, rates.recurrent));
    }
    return m;
}

void LstmClassifier::initialize(Rng& rng) {
    params_.setZero();
    const std::size_t n = spec_.hidden;
    auto fill = [&](std::size_t offset, std::size_t count, double fan_in, double fan_out) {
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        for (std::size_t q = 0; q < count; ++q) params_(static_cast<Index>(offset + q)) = rng.uniform(-s, s);
    };
    for (std::size_t l = 0; l < spec_.layers; ++l) {
        const auto& o = offsets_[l];
        fill(o.w, 4 * n * layer_input(l), static_cast<double>(layer_input(l)), static_cast<double>(n));
        fill(o.u, 4 * n * n, static_cast<double>(n), static_cast<double>(n));
        for (std::size_t q = 0; q < n; ++q) params_(static_cast<Index>(o.b + q)) = 1.0;  // forget gate
    }
    fill(head_w_, spec_.classes * n, static_cast<double>(n), static_cast<double>(spec_.classes));
}

std::unique_ptr<Classifier> LstmClassifier::clone() const { return std::make_unique<LstmClassifier>(*this); }

}  // namespace vip::nn
