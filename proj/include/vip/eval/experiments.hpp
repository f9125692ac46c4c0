#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vip/eval/evaluator.hpp"
#include "vip/train/trainer.hpp"

namespace vip::eval {

/// Summary range for post-contingency means: after the latest possible
/// second contingency.
inline constexpr int kSummaryLo = 36;
inline constexpr int kSummaryHi = 120;

using Log = std::function<void(const std::string&)>;

/// All three splits, truncated to the seconds that windows and curves use.
struct Datasets {
    std::filesystem::path dir;
    nlohmann::json header;
    scenario::SplitData train, val, test;
};

Datasets load_datasets(const std::filesystem::path& dir, int max_t = 180);

/// Which training and validation cases a regime uses.
struct Regime {
    std::string name;  ///< "full", "small-batch", "n1-only"
    std::size_t n11_limit = 0;
    bool include_n11 = true;
};

Regime regime_by_name(const std::string& name, std::size_t small_batch = 250);
train::TrainInput regime_input(const Datasets& data, const Regime& regime);

/// Loads `<dir>/header.json` when it was produced from the same dataset,
/// model, regime, config and seed; otherwise trains, then saves the
/// checkpoint and its history.csv into `dir`.
nn::Checkpoint obtain_model(const Datasets& data, const std::string& model, const Regime& regime,
                            const train::TrainConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir,
                            std::size_t workers, const Log& log = nullptr);

/// Curves, confusion table at T = 50 and a majority baseline for one model.
/// Writes curves.csv, confusion_T50.csv (N-1-1 and N-1 variants), summary.json
/// and accuracy.svg into `out`.
nlohmann::json run_eval(const Datasets& data, const nn::Checkpoint& ckpt, const std::filesystem::path& out,
                        std::size_t workers);

/// Sequence-length ablation on the N-1-1 test split. Writes ablation_curves.csv,
/// ablation_aligned_t2.csv, ablation_summary.json and ablation.svg.
nlohmann::json run_ablation(const Datasets& data, const train::TrainConfig& cfg, std::uint64_t seed,
                            const std::filesystem::path& out, std::size_t workers, const Log& log = nullptr);

/// Training-regime comparison on the N-1-1 test split. Writes
/// generalization_curves.csv, generalization_summary.json and generalization.svg.
nlohmann::json run_generalization(const Datasets& data, const train::TrainConfig& cfg, std::uint64_t seed,
                                  std::size_t small_batch, const std::filesystem::path& out, std::size_t workers,
                                  const Log& log = nullptr);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace vip::eval
