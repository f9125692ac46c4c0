#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "vip/nn/checkpoint.hpp"
#include "vip/scenario/dataset.hpp"
#include "vip/train/trainer.hpp"

namespace vip::eval {

inline constexpr int kFirstPrediction = 60;  ///< T = t - 60
inline constexpr int kMaxT = 120;

train::Normalization normalization_of(const nn::Checkpoint& ckpt);

/// Probabilities for t = first_t .. first_t + probs.cols() - 1.
struct CasePrediction {
    int first_t = kFirstPrediction;
    Eigen::MatrixXd probs;
    std::vector<int> classes;  ///< argmax per column
};

/// Rolling-window prediction over one case of a split, dropout off, for every
/// t from 60 to the last recorded snapshot. Empty when the case ends earlier.
CasePrediction rolling_predict(const nn::Checkpoint& ckpt, const scenario::SplitData& split, std::size_t case_index);

/// Same, for a raw feature series laid out [t-1][feature].
CasePrediction rolling_predict(const nn::Checkpoint& ckpt, const std::vector<float>& features, int t_end);

/// Predicted classes for the listed cases, computed in parallel and stored
/// by position in `cases`.
struct SplitPrediction {
    std::vector<std::size_t> cases;
    std::vector<CasePrediction> per_case;
};

SplitPrediction predict_split(const nn::Checkpoint& ckpt, const scenario::SplitData& split,
                              const std::vector<std::size_t>& cases, std::size_t workers = 1);

struct EvalCurve {
    std::vector<double> accuracy;   ///< index T = 0..kMaxT
    std::vector<std::size_t> count;
    /// Mean of the per-T accuracies over [t_lo, t_hi], skipping empty T.
    [[nodiscard]] double mean(int t_lo, int t_hi) const;
};

/// Accuracy per T of an arbitrary class predictor `predict(case position, t)`.
EvalCurve curve_from_predictor(const scenario::SplitData& split, const std::vector<std::size_t>& cases,
                               const std::function<int(std::size_t, int)>& predict);

EvalCurve accuracy_over_time(const SplitPrediction& pred, const scenario::SplitData& split);

/// Accuracy of a constant prediction, from per-T label histograms.
EvalCurve majority_curve(const scenario::SplitData& split, const std::vector<std::size_t>& cases, int majority);

/// Most frequent class among the given training windows (lowest index on ties).
int majority_class(const scenario::SplitData& split, const std::vector<train::WindowRef>& windows);

struct ConfusionTable {
    std::array<std::array<std::size_t, scenario::kNumClasses>, scenario::kNumClasses> counts{};  ///< [actual][predicted]

    [[nodiscard]] std::size_t total() const;
    [[nodiscard]] std::size_t row_sum(std::size_t actual) const;
    [[nodiscard]] std::size_t col_sum(std::size_t predicted) const;
    [[nodiscard]] double accuracy() const;
    [[nodiscard]] double recall(std::size_t k) const;     ///< NaN for an empty row
    [[nodiscard]] double precision(std::size_t k) const;  ///< NaN for an empty column
};

ConfusionTable confusion_at(const SplitPrediction& pred, const scenario::SplitData& split, int big_t = 50);
void write_confusion_csv(const std::filesystem::path& path, const ConfusionTable& table);

/// Cases of the given kind, in split order.
std::vector<std::size_t> cases_of_kind(const scenario::SplitData& split, scenario::CaseKind kind);

/// Accuracy over t in [60, t1) so early misclassification can be told apart.
double pre_contingency_accuracy(const SplitPrediction& pred, const scenario::SplitData& split);

/// For each N-1-1 case with a second contingency, the first t from which the
/// model's output no longer depends on any snapshot before t2. Measured by
/// replacing the pre-t2 snapshots with the training mean and comparing
/// outputs bit for bit.
struct OnsetMeasurement {
    std::size_t case_index = 0;
    int t2 = 0;
    int onset_t = -1;  ///< -1 when the case ends before the window clears t2
};

std::vector<OnsetMeasurement> memory_onsets(const nn::Checkpoint& ckpt, const scenario::SplitData& split,
                                            const std::vector<std::size_t>& cases, std::size_t workers = 1);

/// Accuracy of N-1-1 cases aligned on the second contingency: index d is
/// t - t2 for d in [d_lo, d_hi].
struct AlignedCurve {
    int d_lo = 0;
    std::vector<double> accuracy;
    std::vector<std::size_t> count;
};

AlignedCurve aligned_on_second(const SplitPrediction& pred, const scenario::SplitData& split, int d_lo, int d_hi);

void write_curves_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                      const std::vector<EvalCurve>& curves);

struct ChartSeries {
    std::string name;
    std::vector<double> y;  ///< one value per x
};

/// Self-contained SVG line chart of accuracy against time.
void write_svg_chart(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     int x0, const std::vector<ChartSeries>& series, std::pair<int, int> shaded = {0, 0});

}  // namespace vip::eval
