#pragma once

#include <span>
#include <string>
#include <vector>

#include "vip/common/rng.hpp"
#include "vip/grid/grid_model.hpp"
#include "vip/grid/simulator.hpp"

namespace vip::scenario {

struct LoadSampling {
    double min_factor = 0.8;
    double max_factor = 1.2;
};

/// Maps uniform draws to an operating condition. `load_draws` has one value in
/// [0, 1) per load; `weight_draws` one per generator (slack entry unused).
/// Non-slack generators take the load change in proportion to capacity × draw,
/// clipped to [0, capacity]; whatever they cannot cover goes to the slack.
grid::OperatingCondition operating_condition_from_draws(const grid::GridModel& base,
                                                        std::span<const double> load_draws,
                                                        std::span<const double> weight_draws,
                                                        const LoadSampling& sampling = {});

grid::OperatingCondition sample_operating_condition(const grid::GridModel& base, Rng& rng,
                                                    const LoadSampling& sampling = {});

struct ScheduleSampling {
    int t1 = 66;
    int min_delay = 10;
    int max_delay = 30;
    std::vector<grid::Contingency> major;  ///< candidates for the first contingency

    /// Corridor lines B3-B5a/b, B4-B6a/b and generator G8.
    static ScheduleSampling defaults();
};

/// Second-contingency candidates after `first`: in-service lines whose removal
/// keeps the network connected.
std::vector<grid::Contingency> second_candidates(const grid::GridModel& base, const grid::Contingency& first);

/// A two-event schedule (first at t1, second at t1 + U{min_delay..max_delay}).
/// The N-1 partner uses only `first()`.
grid::ContingencySchedule sample_schedule(const grid::GridModel& base, Rng& rng, const ScheduleSampling& sampling);

/// The schedule truncated to its first event.
grid::ContingencySchedule n1_schedule(const grid::ContingencySchedule& s);

}  // namespace vip::scenario
