#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vip/grid/devices.hpp"
#include "vip/grid/grid_model.hpp"
#include "vip/grid/power_flow.hpp"

namespace vip::grid {

/// Pre-disturbance operating point: a scale factor per load (power factor
/// kept) and an active dispatch per generator. The slack entry is ignored by
/// the power flow; it records the planned slack share.
struct OperatingCondition {
    std::vector<double> load_factors;
    std::vector<double> gen_p;
};

/// The unmodified operating point of a model (factors 1, base dispatch).
OperatingCondition base_operating_condition(const GridModel& model);
GridModel apply_operating_condition(const GridModel& model, const OperatingCondition& oc);

struct ScheduledContingency {
    int time = 0;  ///< whole seconds; applied before the solve of that second
    Contingency contingency;
    friend bool operator==(const ScheduledContingency&, const ScheduledContingency&) = default;
};

struct ContingencySchedule {
    std::vector<ScheduledContingency> events;  ///< at most two, ordered by time

    [[nodiscard]] bool empty() const { return events.empty(); }
    [[nodiscard]] std::optional<ScheduledContingency> first() const;
    [[nodiscard]] std::optional<ScheduledContingency> second() const;
    friend bool operator==(const ContingencySchedule&, const ContingencySchedule&) = default;
};

struct SimConfig {
    int horizon = 560;
    double collapse_voltage = 0.7;  ///< any monitored bus below this ends the run
    int max_tap_settle_rounds = 100;
    bool record_devices = false;
    PowerFlowOptions power_flow;
    OltcParams oltc;
    OxlParams oxl;
};

/// Mutable electrical and discrete-device state while stepping.
struct GridState {
    Eigen::VectorXd v;
    Eigen::VectorXd theta;
    std::vector<OltcState> oltc;
    std::vector<OxlState> oxl;
    int t = 0;
};

/// Fixed feature ordering: |V| for every bus, θ for every bus, then P and Q
/// at the from-end of every branch (tripped branches report 0).
std::vector<std::string> feature_names(const GridModel& model);
std::size_t feature_count(const GridModel& model);

struct Trajectory {
    std::size_t num_features = 0;
    std::vector<float> features;  ///< row-major [t-1][feature], t = 1..t_end
    int t_end = 0;
    bool collapsed = false;
    std::optional<int> collapse_time;
    ContingencySchedule schedule;
    Eigen::VectorXd final_v;     ///< bus voltages at the last recorded second
    double max_mismatch = 0.0;   ///< worst converged power-flow residual over the run
    std::vector<std::vector<int>> tap_positions;  ///< per second, when SimConfig::record_devices
    std::vector<std::vector<bool>> oxl_tripped;   ///< per second, when SimConfig::record_devices

    [[nodiscard]] const float* snapshot(int t) const {
        return features.data() + static_cast<std::size_t>(t - 1) * num_features;
    }
};

/// Solves the t = 0 operating point, settles OLTC taps into their deadbands and
/// latches OXLs of generators already above q_max. Throws InfeasibleStart when
/// any of those power flows fails to converge.
GridState initialize_state(const GridModel& model, const SimConfig& cfg, NetworkControls* controls_out = nullptr);

/// Quasi-steady-state run at 1 s steps up to cfg.horizon, stopping early on
/// power-flow divergence or monitored undervoltage (collapse).
Trajectory simulate_case(const GridModel& model, const OperatingCondition& oc, const ContingencySchedule& schedule,
                         const SimConfig& cfg = {});

/// True iff the initial power flow (including tap settling) converges.
bool check_feasibility(const GridModel& model, const OperatingCondition& oc, const SimConfig& cfg = {});

}  // namespace vip::grid
