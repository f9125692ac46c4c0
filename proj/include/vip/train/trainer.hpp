#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vip/nn/checkpoint.hpp"
#include "vip/nn/network.hpp"
#include "vip/scenario/dataset.hpp"

namespace vip::train {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 256;
    int max_epochs = 400;
    int patience = 6;
    int t_min = 60;
    int t_max = 180;
    std::size_t windows_per_case = 24;
    nn::DropoutRates dropout{0.5, 0.5};
    std::size_t hidden = 32;
    std::size_t layers = 3;
    /// Windows per gradient work unit. Results do not depend on the worker
    /// count, but they do depend on this value.
    std::size_t grad_chunk = 32;
    std::string monitor = "accuracy";  ///< early-stopping metric: "accuracy" or "loss"

    [[nodiscard]] nlohmann::json to_json() const;
    void merge_json(const nlohmann::json& j);
    [[nodiscard]] std::string hash() const;
};

/// "lstm-60", "lstm-30" or "ffnn".
nn::NetSpec spec_for_model(const std::string& model, std::size_t input_dim, const TrainConfig& cfg = {});
const std::vector<std::string>& model_names();

/// A window is a reference into a split: the target is the label at `t` and
/// the inputs are the seq_len snapshots ending at `t`.
struct WindowRef {
    std::uint32_t case_index = 0;
    std::int32_t t = 0;
    friend bool operator==(const WindowRef&, const WindowRef&) = default;
};

/// Evenly spaced window end times: t_min + floor(k (t_max - t_min) / count).
std::vector<int> window_times(const TrainConfig& cfg);

/// Windows of one case, dropping times after the last snapshot. Throws
/// CaseTooShort when the case has fewer than t_min snapshots.
std::vector<WindowRef> make_windows(const scenario::SplitData& split, std::size_t case_index, const TrainConfig& cfg);

struct WindowSet {
    std::vector<WindowRef> windows;
    std::size_t skipped_cases = 0;
};

/// Windows of the listed cases in case order; short cases are skipped and counted.
WindowSet build_windows(const scenario::SplitData& split, const std::vector<std::size_t>& cases,
                        const TrainConfig& cfg);

std::vector<std::size_t> all_cases(const scenario::SplitData& split);

struct Normalization {
    std::vector<double> mean;
    std::vector<double> std;
};

/// Per-feature z-score statistics over every recorded snapshot of the listed
/// cases up to the loaded horizon. Near-constant features get std 1.
Normalization compute_normalization(const scenario::SplitData& split, const std::vector<std::size_t>& cases);

/// Gathers normalized inputs for windows [begin, end) of `refs`.
nn::SequenceBatch assemble_batch(const scenario::SplitData& split, const Normalization& norm,
                                 std::span<const WindowRef> refs, std::size_t seq_len);

/// Class probabilities (classes × windows) without dropout, computed in
/// fixed-size chunks.
Eigen::MatrixXd predict_windows(const nn::Classifier& net, const Normalization& norm,
                                const scenario::SplitData& split, std::span<const WindowRef> refs,
                                std::size_t workers = 1, std::size_t chunk = 256);

/// Patience-based stopping on a metric where larger is better.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}
    /// Returns true when `metric` is a strict improvement on the best so far.
    bool update(double metric);
    [[nodiscard]] bool should_stop() const { return since_best_ >= patience_; }
    [[nodiscard]] int best_epoch() const { return best_epoch_; }
    [[nodiscard]] double best() const { return best_; }

private:
    int patience_;
    int epoch_ = 0;
    int best_epoch_ = 0;
    int since_best_ = 0;
    double best_ = 0.0;
    bool any_ = false;
};

struct HistoryRow {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

struct TrainInput {
    const scenario::SplitData* train = nullptr;
    std::vector<std::size_t> train_cases;
    const scenario::SplitData* val = nullptr;
    std::vector<std::size_t> val_cases;
};

struct TrainResult {
    nn::Checkpoint checkpoint;
    std::vector<HistoryRow> history;
    int best_epoch = 0;
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
    std::size_t skipped_cases = 0;
};

/// Mini-batch Adam with per-sequence dropout and early stopping on the
/// validation split. Returns the parameters of the best validation epoch.
/// Throws EmptyDataset when no training windows exist and DivergedLoss on a
/// non-finite batch loss.
TrainResult train_model(const TrainInput& input, const std::string& model, const TrainConfig& cfg, std::uint64_t seed,
                        std::size_t workers = 1, const std::function<void(const HistoryRow&)>& on_epoch = nullptr);

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history);

/// Loss and accuracy of `net` on one fixed batch, used by the capacity check.
struct BatchFit {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Repeated Adam steps on the same batch (dropout off). Returns the fit after
/// each of `steps` updates has been applied.
BatchFit fit_single_batch(nn::Classifier& net, const nn::SequenceBatch& batch, std::span<const int> targets, int steps,
                          double learning_rate);

}  // namespace vip::train
