#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vip/grid/simulator.hpp"
#include "vip/scenario/labeling.hpp"
#include "vip/scenario/sampling.hpp"

namespace vip::scenario {

inline constexpr const char* kGeneratorVersion = "vip-gen-1";

struct SplitCounts {
    std::size_t n1 = 0;   ///< N-1 cases kept
    std::size_t n11 = 0;  ///< N-1-1 cases kept
    [[nodiscard]] std::size_t pairs() const { return std::max(n1, n11); }
};

struct GenConfig {
    std::filesystem::path grid_file = std::filesystem::path(VIP_DATA_DIR) / "grid12.json";
    SplitCounts train{2000, 4000};
    SplitCounts val{250, 500};
    SplitCounts test{500, 500};
    LoadSampling load;
    ScheduleSampling schedule = ScheduleSampling::defaults();
    grid::SimConfig sim;
    std::size_t max_attempts = 100;  ///< OC draws per pair before giving up
    std::size_t export_csv = 0;      ///< cases per split also written as CSV

    [[nodiscard]] nlohmann::json to_json() const;
    /// Overrides fields present in `j`; unknown keys throw Config.
    void merge_json(const nlohmann::json& j);
};

inline constexpr std::array<const char*, 3> kSplitNames{"train", "val", "test"};

/// One simulated pair. Both cases come from the same operating condition
/// and the same first contingency.
struct GeneratedPair {
    LabeledCase n1;
    LabeledCase n11;
    grid::OperatingCondition oc;
    std::size_t attempts = 1;  ///< OC draws needed to get a feasible start
};

/// Draws an operating condition (redrawing infeasible ones), a schedule, runs
/// both simulations and labels them. Throws RetryBudgetExceeded after
/// cfg.max_attempts infeasible draws.
GeneratedPair generate_pair(const grid::GridModel& base, const GenConfig& cfg, std::uint64_t pair_seed);

/// Per-case metadata stored alongside the binary blobs.
struct CaseRecord {
    std::size_t index = 0;
    CaseKind kind = CaseKind::N1;
    std::int64_t pair = -1;  ///< index of the partner case in the same split, or -1
    int t_end = 0;
    bool collapsed = false;
    int collapse_time = -1;
    int t1 = kFirstContingencyTime;
    int t2 = 0;
    std::string first;   ///< e.g. "line:B3-B5a"
    std::string second;  ///< empty for N-1 cases
    StabilityClass end_class = StabilityClass::Stable;
    StabilityClass first_class = StabilityClass::Stable;
    std::size_t attempts = 1;
    std::vector<double> load_factors;
    std::vector<double> gen_p;
};

using ClassHistogram = std::array<std::size_t, kNumClasses>;

struct GenerationReport {
    nlohmann::json header;
    std::array<ClassHistogram, 3> at_t180{};  ///< per split, label at t = 180
    std::array<std::size_t, 3> infeasible_draws{};
};

/// Writes a dataset directory: header.json and, per split, <split>.features.bin
/// (f32 [case][horizon][feature], zero after t_end), <split>.labels.bin (u8
/// [case][horizon]) and <split>.cases.csv. Output bytes depend only on the
/// grid file, cfg and seed.
GenerationReport generate_dataset(const GenConfig& cfg, std::uint64_t seed, const std::filesystem::path& out,
                                  std::size_t workers = 1,
                                  const std::function<void(const std::string&)>& log = nullptr);

/// A split loaded into memory, possibly truncated to the first max_t seconds.
struct SplitData {
    std::string name;
    std::size_t num_features = 0;
    int horizon = 0;  ///< seconds kept per case
    std::vector<float> features;
    std::vector<std::uint8_t> labels;
    std::vector<CaseRecord> cases;

    [[nodiscard]] std::size_t size() const { return cases.size(); }
    [[nodiscard]] const float* snapshot(std::size_t c, int t) const {
        return features.data() + (c * static_cast<std::size_t>(horizon) + static_cast<std::size_t>(t - 1)) * num_features;
    }
    [[nodiscard]] int label(std::size_t c, int t) const {
        return labels[c * static_cast<std::size_t>(horizon) + static_cast<std::size_t>(t - 1)];
    }
    /// Last second with a recorded snapshot, limited to the loaded horizon.
    [[nodiscard]] int last_t(std::size_t c) const { return std::min(cases[c].t_end, horizon); }
};

nlohmann::json read_header(const std::filesystem::path& dir);
/// Loads one split. Missing files throw Io; size mismatches throw ShapeMismatch.
SplitData load_split(const std::filesystem::path& dir, const std::string& split, int max_t = 560);

std::string case_kind_name(CaseKind k);

/// Case CSV: `t,label,<feature...>` with one row per recorded second.
void write_case_csv(const std::filesystem::path& path, const std::vector<std::string>& feature_names,
                    const float* features, const std::uint8_t* labels, int t_end);

struct CaseSeries {
    std::vector<std::string> feature_names;
    std::vector<float> features;  ///< row-major [t-1][feature]
    std::vector<int> labels;      ///< empty when the file has no label column
    int t_end = 0;
};

/// Reads a case CSV. A `label` column is optional. Malformed input throws Config.
CaseSeries read_case_csv(const std::filesystem::path& path);

}  // namespace vip::scenario
