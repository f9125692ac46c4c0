#pragma once

#include <vector>

#include "vip/nn/network.hpp"

namespace vip::nn {

/// Feed-forward baseline on a single snapshot: `layers` dense tanh layers of
/// `hidden` units and the same softmax head as the LSTM. Flat parameter order:
/// for each layer W_l (H × in_l, column-major), b_l (H); then head W (K × H), b (K).
class FfnnClassifier final : public Classifier {
public:
    explicit FfnnClassifier(const NetSpec& spec);

    [[nodiscard]] const NetSpec& spec() const override { return spec_; }
    [[nodiscard]] std::size_t param_count() const override { return total_; }

    struct Cache : ForwardCache {
        std::vector<Eigen::MatrixXd> inputs;       ///< per layer, after dropout
        std::vector<Eigen::MatrixXd> activations;  ///< per layer, tanh output
        Eigen::MatrixXd logits;
        DropoutMasks masks;
    };

    [[nodiscard]] std::unique_ptr<ForwardCache> forward(const SequenceBatch& x,
                                                        const DropoutMasks* masks) const override;
    void backward(const ForwardCache& cache, std::span<const int> targets, Eigen::VectorXd& grad) const override;
    [[nodiscard]] DropoutMasks sample_masks(Rng& rng, Eigen::Index batch, const DropoutRates& rates) const override;
    void initialize(Rng& rng) override;
    [[nodiscard]] std::unique_ptr<Classifier> clone() const override;

private:
    [[nodiscard]] std::size_t layer_input(std::size_t l) const { return l == 0 ? spec_.input_dim : spec_.hidden; }

    NetSpec spec_;
    std::vector<std::size_t> w_off_, b_off_;
    std::size_t head_w_ = 0, head_b_ = 0, total_ = 0;
};

}  // namespace vip::nn
