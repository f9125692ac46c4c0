#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vip/grid/grid_model.hpp"
#include "vip/grid/simulator.hpp"

namespace vip::scenario {

enum class StabilityClass : std::uint8_t { Stable = 0, AlertC1 = 1, AlertC2 = 2, AlertC3 = 3, Emergency = 4 };

inline constexpr std::size_t kNumClasses = 5;
inline constexpr int kFirstContingencyTime = 66;

const std::array<std::string, kNumClasses>& class_names();
std::string to_string(StabilityClass c);
StabilityClass class_from_index(std::size_t k);
inline std::size_t index_of(StabilityClass c) { return static_cast<std::size_t>(c); }

/// Classification thresholds on monitored transmission-bus voltages.
struct LabelRule {
    std::vector<std::size_t> monitored;
    std::vector<grid::Region> regions;  ///< region of each monitored bus
    double stable_voltage = 1.0;        ///< all monitored >= this: Stable
    double emergency_voltage = 0.9;     ///< any monitored below this: Emergency

    static LabelRule from_model(const grid::GridModel& model);
};

/// Class of a set of monitored-bus voltages (same order as rule.monitored).
StabilityClass classify_voltages(std::span<const double> monitored_v, const LabelRule& rule);

/// Collapsed runs are Emergency; otherwise the monitored voltages at t_end decide.
StabilityClass classify_end_state(const grid::Trajectory& traj, const LabelRule& rule);

enum class CaseKind : std::uint8_t { N1 = 0, N11 = 1 };

struct LabeledCase {
    grid::Trajectory trajectory;
    std::vector<StabilityClass> labels;  ///< y^1..y^horizon
    CaseKind kind = CaseKind::N1;
    StabilityClass end_class = StabilityClass::Stable;
    StabilityClass first_class = StabilityClass::Stable;  ///< end class of the N-1 partner
    int t1 = kFirstContingencyTime;
    int t2 = 0;  ///< 0 for N-1 cases
};

/// Labels a paired N-1 / N-1-1 run. Both share the operating condition and the
/// first contingency, so their snapshots must agree before t2 (PairMismatch
/// otherwise). `horizon` is the label length.
std::pair<LabeledCase, LabeledCase> label_pair(grid::Trajectory n1, grid::Trajectory n11, int t2,
                                               const LabelRule& rule, int horizon = 560);

}  // namespace vip::scenario
