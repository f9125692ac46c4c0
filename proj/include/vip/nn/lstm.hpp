#pragma once

#include <vector>

#include "vip/nn/network.hpp"

namespace vip::nn {

/// Weights of one LSTM layer, gates stacked f, i, c̃, o along the rows.
struct LstmLayerView {
    Eigen::Map<const Eigen::MatrixXd> w;  ///< 4N × input
    Eigen::Map<const Eigen::MatrixXd> u;  ///< 4N × N
    Eigen::Map<const Eigen::VectorXd> b;  ///< 4N
};

/// Per-step values of one LSTM block kept for backpropagation.
struct LstmStepCache {
    Eigen::MatrixXd x;       ///< input after dropout
    Eigen::MatrixXd h_prev;  ///< previous hidden after recurrent dropout
    Eigen::MatrixXd c_prev;
    Eigen::MatrixXd gates;   ///< activated f, i, c̃, o stacked (4N × batch)
    Eigen::MatrixXd c;
    Eigen::MatrixXd tanh_c;
    Eigen::MatrixXd h;
};

/// One block step: f, i, o = σ(W x + U h + b), c̃ = tanh(...), c = f⊙c_prev + i⊙c̃,
/// h = o⊙tanh(c). Works column-wise on a batch.
LstmStepCache lstm_block_forward(const LstmLayerView& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
                                 const Eigen::MatrixXd& c_prev);

/// Stacked many-to-one LSTM with a softmax head on the last step of the top
/// layer. Flat parameter order: for each layer l = 1..L: W_l (4N × in_l,
/// column-major), U_l (4N × N), b_l (4N); then head weights (K × N) and head
/// bias (K). Gate order inside each block of 4N rows is f, i, c̃, o.
class LstmClassifier final : public Classifier {
public:
    explicit LstmClassifier(const NetSpec& spec);

    [[nodiscard]] const NetSpec& spec() const override { return spec_; }
    [[nodiscard]] std::size_t param_count() const override { return total_; }

    struct Cache : ForwardCache {
        std::vector<std::vector<LstmStepCache>> steps;  ///< [layer][time]
        Eigen::MatrixXd logits;
        DropoutMasks masks;
    };

    [[nodiscard]] std::unique_ptr<ForwardCache> forward(const SequenceBatch& x,
                                                        const DropoutMasks* masks) const override;
    void backward(const ForwardCache& cache, std::span<const int> targets, Eigen::VectorXd& grad) const override;
    [[nodiscard]] DropoutMasks sample_masks(Rng& rng, Eigen::Index batch, const DropoutRates& rates) const override;
    void initialize(Rng& rng) override;
    [[nodiscard]] std::unique_ptr<Classifier> clone() const override;

    [[nodiscard]] LstmLayerView layer(std::size_t l) const;
    [[nodiscard]] std::size_t layer_input(std::size_t l) const { return l == 0 ? spec_.input_dim : spec_.hidden; }

    struct Offsets {
        std::size_t w, u, b;
    };
    [[nodiscard]] const Offsets& layer_offsets(std::size_t l) const { return offsets_[l]; }
    [[nodiscard]] std::size_t head_w_offset() const { return head_w_; }
    [[nodiscard]] std::size_t head_b_offset() const { return head_b_; }

private:
    NetSpec spec_;
    std::vector<Offsets> offsets_;
    std::size_t head_w_ = 0, head_b_ = 0, total_ = 0;
};

}  // namespace vip::nn
