#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vip/common/rng.hpp"

namespace vip::nn {

/// One sequence batch: `steps[s]` holds the inputs of time step s for every
/// batch item as columns (input_dim × batch).
struct SequenceBatch {
    std::vector<Eigen::MatrixXd> steps;

    [[nodiscard]] std::size_t length() const { return steps.size(); }
    [[nodiscard]] Eigen::Index batch() const { return steps.empty() ? 0 : steps.front().cols(); }
    [[nodiscard]] Eigen::Index features() const { return steps.empty() ? 0 : steps.front().rows(); }
};

/// Inverted-dropout keep masks, one column per batch item, held fixed for the
/// whole sequence. Empty vectors mean "no dropout".
struct DropoutMasks {
    std::vector<Eigen::MatrixXd> input;      ///< per layer: layer_input_dim × batch
    std::vector<Eigen::MatrixXd> recurrent;  ///< per layer: hidden × batch (LSTM only)

    [[nodiscard]] bool empty() const { return input.empty() && recurrent.empty(); }
};

struct DropoutRates {
    double input = 0.5;
    double recurrent = 0.5;
};

/// Bernoulli keep-mask with entries 0 or 1/(1-rate). Rate 0 gives all ones.
Eigen::MatrixXd sample_keep_mask(Rng& rng, Eigen::Index rows, Eigen::Index cols, double rate);

enum class NetKind { Lstm, Ffnn };

struct NetSpec {
    NetKind kind = NetKind::Lstm;
    std::size_t input_dim = 0;
    std::size_t hidden = 32;
    std::size_t layers = 3;
    std::size_t classes = 5;
    std::size_t seq_len = 60;  ///< 1 for feed-forward nets

    friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

std::string to_string(NetKind kind);

/// Base for per-forward state kept for the backward pass.
struct ForwardCache {
    virtual ~ForwardCache() = default;
    Eigen::MatrixXd probs;  ///< classes × batch
};

/// A classifier whose trainable parameters live in one flat vector. The
/// layout of that vector is fixed per network type and documented on each
/// implementation; checkpoints store it verbatim.
class Classifier {
public:
    virtual ~Classifier() = default;

    [[nodiscard]] virtual const NetSpec& spec() const = 0;
    [[nodiscard]] virtual std::size_t param_count() const = 0;

    [[nodiscard]] Eigen::VectorXd& params() { return params_; }
    [[nodiscard]] const Eigen::VectorXd& params() const { return params_; }

    /// Class probabilities for the batch. `masks` may be null (evaluation).
    [[nodiscard]] virtual std::unique_ptr<ForwardCache> forward(const SequenceBatch& x,
                                                                const DropoutMasks* masks) const = 0;

    /// Gradient of the mean cross-entropy over the batch with respect to every
    /// parameter, written into `grad` (resized to param_count()).
    virtual void backward(const ForwardCache& cache, std::span<const int> targets, Eigen::VectorXd& grad) const = 0;

    [[nodiscard]] virtual DropoutMasks sample_masks(Rng& rng, Eigen::Index batch, const DropoutRates& rates) const = 0;

    /// Glorot-uniform weights, zero biases (LSTM forget-gate bias 1).
    virtual void initialize(Rng& rng) = 0;

    [[nodiscard]] virtual std::unique_ptr<Classifier> clone() const = 0;

protected:
    Eigen::VectorXd params_;
};

std::unique_ptr<Classifier> make_classifier(const NetSpec& spec);

/// Numerically stable softmax of each column.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

inline constexpr double kLogEpsilon = 1e-12;

/// −Σ y_k log(p_k + ε) for a one-hot target.
double cross_entropy(const Eigen::VectorXd& probs, const Eigen::VectorXd& one_hot);
double cross_entropy(const Eigen::VectorXd& probs, int target);
/// Mean cross-entropy over the batch columns.
double mean_cross_entropy(const Eigen::MatrixXd& probs, std::span<const int> targets);

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace vip::nn
