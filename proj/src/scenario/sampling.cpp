#include "vip/scenario/sampling.hpp"

#include <algorithm>

#include "vip/common/error.hpp"

namespace vip::scenario {

grid::OperatingCondition operating_condition_from_draws(const grid::GridModel& base,
                                                        std::span<const double> load_draws,
                                                        std::span<const double> weight_draws,
                                                        const LoadSampling& sampling) {
    if (load_draws.size() != base.loads.size() || weight_draws.size() != base.generators.size()) {
        throw Error(ErrorCode::ShapeMismatch, "draw counts do not match the grid");
    }
    auto oc = grid::base_operating_condition(base);
    double delta = 0.0;
    for (std::size_t l = 0; l < base.loads.size(); ++l) {
        oc.load_factors[l] = sampling.min_factor + (sampling.max_factor - sampling.min_factor) * load_draws[l];
        delta += base.loads[l].p0 * (oc.load_factors[l] - 1.0);
    }
    const auto slack_bus = base.slack_bus();
    double weight_sum = 0.0;
    std::vector<double> weights(base.generators.size(), 0.0);
    for (std::size_t g = 0; g < base.generators.size(); ++g) {
        const auto& gen = base.generators[g];
        if (gen.bus == slack_bus || !gen.in_service) continue;
        weights[g] = gen.capacity * weight_draws[g];
        weight_sum += weights[g];
    }
    double covered = 0.0;
    if (weight_sum > 0.0 && delta != 0.0) {
        for (std::size_t g = 0; g < base.generators.size(); ++g) {
            if (weights[g] == 0.0) continue;
            const auto& gen = base.generators[g];
            const double target = gen.p + delta * weights[g] / weight_sum;
            oc.gen_p[g] = std::clamp(target, 0.0, gen.capacity);
            covered += oc.gen_p[g] - gen.p;
        }
    }
    for (std::size_t g = 0; g < base.generators.size(); ++g) {
        if (base.generators[g].bus == slack_bus) oc.gen_p[g] = base.generators[g].p + (delta - covered);
    }
    return oc;
}

grid::OperatingCondition sample_operating_condition(const grid::GridModel& base, Rng& rng,
                                                    const LoadSampling& sampling) {
    std::vector<double> load_draws(base.loads.size()), weight_draws(base.generators.size());
    for (auto& d : load_draws) d = rng.uniform();
    for (auto& d : weight_draws) d = rng.uniform();
    return operating_condition_from_draws(base, load_draws, weight_draws, sampling);
}

ScheduleSampling ScheduleSampling::defaults() {
    ScheduleSampling s;
    s.major = {grid::Contingency::trip_branch("B3-B5a"), grid::Contingency::trip_branch("B3-B5b"),
               grid::Contingency::trip_branch("B4-B6a"), grid::Contingency::trip_branch("B4-B6b"),
               grid::Contingency::trip_generator("G8")};
    return s;
}

std::vector<grid::Contingency> second_candidates(const grid::GridModel& base, const grid::Contingency& first) {
    const auto after = grid::apply_contingency(base, first);
    std::vector<grid::Contingency> out;
    for (std::size_t k = 0; k < after.branches.size(); ++k) {
        const auto& br = after.branches[k];
        if (!br.in_service || br.kind != grid::BranchKind::Line) continue;
        if (!grid::branch_removal_keeps_connected(after, k)) continue;
        out.push_back(grid::Contingency::trip_branch(br.id));
    }
    return out;
}

grid::ContingencySchedule sample_schedule(const grid::GridModel& base, Rng& rng, const ScheduleSampling& sampling) {
    if (sampling.major.empty()) throw Error(ErrorCode::Config, "empty major contingency set");
    const auto& first = sampling.major[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(sampling.major.size()) - 1))];
    const int t2 = sampling.t1 + static_cast<int>(rng.uniform_int(sampling.min_delay, sampling.max_delay));
    const auto candidates = second_candidates(base, first);
    if (candidates.empty()) throw Error(ErrorCode::Config, "no admissible second contingency after " + first.element);
    const auto& second =
        candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];
    grid::ContingencySchedule s;
    s.events = {{sampling.t1, first}, {t2, second}};
    return s;
}

grid::ContingencySchedule n1_schedule(const grid::ContingencySchedule& s) {
    grid::ContingencySchedule out;
    if (!s.events.empty()) out.events.push_back(s.events.front());
    return out;
}

}  // namespace vip::scenario
