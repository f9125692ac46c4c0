#include "vip/grid/simulator.hpp"

#include <algorithm>

#include "vip/common/error.hpp"

namespace vip::grid {

std::optional<ScheduledContingency> ContingencySchedule::first() const {
    if (events.empty()) return std::nullopt;
    return events.front();
}

std::optional<ScheduledContingency> ContingencySchedule::second() const {
    if (events.size() < 2) return std::nullopt;
    return events[1];
}

OperatingCondition base_operating_condition(const GridModel& model) {
    OperatingCondition oc;
    oc.load_factors.assign(model.loads.size(), 1.0);
    for (const auto& g : model.generators) oc.gen_p.push_back(g.p);
    return oc;
}

GridModel apply_operating_condition(const GridModel& model, const OperatingCondition& oc) {
    if (oc.load_factors.size() != model.loads.size() || oc.gen_p.size() != model.generators.size()) {
        throw Error(ErrorCode::ShapeMismatch, "operating condition does not match the grid");
    }
    GridModel m = model;
    for (std::size_t l = 0; l < m.loads.size(); ++l) {
        m.loads[l].p0 *= oc.load_factors[l];
        m.loads[l].q0 *= oc.load_factors[l];
    }
    for (std::size_t g = 0; g < m.generators.size(); ++g) m.generators[g].p = oc.gen_p[g];
    return m;
}

std::vector<std::string> feature_names(const GridModel& model) {
    std::vector<std::string> names;
    for (const auto& b : model.buses) names.push_back("V:" + b.id);
    for (const auto& b : model.buses) names.push_back("theta:" + b.id);
    for (const auto& br : model.branches) {
        names.push_back("P:" + br.id);
        names.push_back("Q:" + br.id);
    }
    return names;
}

std::size_t feature_count(const GridModel& model) {
    return 2 * model.buses.size() + 2 * model.branches.size();
}

namespace {

NetworkControls controls_from(const GridModel& model, const GridState& s, const OltcParams& oltc) {
    NetworkControls c;
    for (const auto& o : s.oltc) c.taps.push_back(o.tap(oltc));
    for (const auto& x : s.oxl) c.oxl_limited.push_back(x.tripped);
    (void)model;
    return c;
}

void append_features(std::vector<float>& out, const PowerFlowResult& pf) {
    for (Eigen::Index i = 0; i < pf.v.size(); ++i) out.push_back(static_cast<float>(pf.v(i)));
    for (Eigen::Index i = 0; i < pf.theta.size(); ++i) out.push_back(static_cast<float>(pf.theta(i)));
    for (std::size_t k = 0; k < pf.p_from.size(); ++k) {
        out.push_back(static_cast<float>(pf.p_from[k]));
        out.push_back(static_cast<float>(pf.q_from[k]));
    }
}

PowerFlowResult initial_solve(const GridModel& model, const SimConfig& cfg, GridState& s) {
    const auto load_idx = model.oltc_load_index();
    const auto oltc_br = model.oltc_branches();
    s.oltc.assign(oltc_br.size(), OltcState{});
    s.oxl.assign(model.generators.size(), OxlState{});
    auto pf = solve_power_flow(model, controls_from(model, s, cfg.oltc), {}, {}, cfg.power_flow);
    if (!pf.converged) throw Error(ErrorCode::InfeasibleStart, "initial power flow diverged");
    for (int round = 0; round < cfg.max_tap_settle_rounds; ++round) {
        bool moved = false;
        for (std::size_t k = 0; k < oltc_br.size(); ++k) {
            const double v = pf.v(model.loads[load_idx[k]].bus);
            auto& o = s.oltc[k];
            if (v < cfg.oltc.deadband_low && o.position < cfg.oltc.max_position) {
                ++o.position;
                moved = true;
            } else if (v > cfg.oltc.deadband_high && o.position > cfg.oltc.min_position) {
                --o.position;
                moved = true;
            }
        }
        if (!moved) break;
        pf = solve_power_flow(model, controls_from(model, s, cfg.oltc), pf.v, pf.theta, cfg.power_flow);
        if (!pf.converged) throw Error(ErrorCode::InfeasibleStart, "power flow diverged while settling taps");
    }
    bool latched = false;
    for (std::size_t g = 0; g < model.generators.size(); ++g) {
        const auto& gen = model.generators[g];
        if (gen.in_service && gen.oxl && pf.q_gen[g] > gen.q_max) {
            s.oxl[g].tripped = true;
            latched = true;
        }
    }
    if (latched) {
        pf = solve_power_flow(model, controls_from(model, s, cfg.oltc), pf.v, pf.theta, cfg.power_flow);
        if (!pf.converged) throw Error(ErrorCode::InfeasibleStart, "power flow diverged after OXL limiting");
    }
    s.v = pf.v;
    s.theta = pf.theta;
    s.t = 0;
    return pf;
}

}  // namespace

GridState initialize_state(const GridModel& model, const SimConfig& cfg, NetworkControls* controls_out) {
    GridState s;
    initial_solve(model, cfg, s);
    if (controls_out) *controls_out = controls_from(model, s, cfg.oltc);
    return s;
}

bool check_feasibility(const GridModel& model, const OperatingCondition& oc, const SimConfig& cfg) {
    try {
        const auto m = apply_operating_condition(model, oc);
        GridState s;
        initial_solve(m, cfg, s);
        return true;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InfeasibleStart) return false;
        throw;
    }
}

Trajectory simulate_case(const GridModel& base, const OperatingCondition& oc, const ContingencySchedule& schedule,
                         const SimConfig& cfg) {
    GridModel model = apply_operating_condition(base, oc);
    GridState s;
    PowerFlowResult pf = initial_solve(model, cfg, s);
    const auto load_idx = model.oltc_load_index();

    Trajectory traj;
    traj.num_features = feature_count(model);
    traj.schedule = schedule;
    traj.features.reserve(static_cast<std::size_t>(cfg.horizon) * traj.num_features);

    for (int t = 1; t <= cfg.horizon; ++t) {
        s.t = t;
        for (const auto& ev : schedule.events) {
            if (ev.time == t) model = apply_contingency(model, ev.contingency);
        }
        // Discrete devices act on the measurements of the previous second.
        for (std::size_t k = 0; k < s.oltc.size(); ++k) {
            const double v = pf.v(model.loads[load_idx[k]].bus);
            s.oltc[k] = step_oltc(s.oltc[k], v, 1.0, cfg.oltc).state;
        }
        for (std::size_t g = 0; g < s.oxl.size(); ++g) {
            const auto& gen = model.generators[g];
            if (!gen.oxl || !gen.in_service) continue;
            s.oxl[g] = step_oxl(s.oxl[g], pf.q_gen[g], gen.q_max, 1.0, cfg.oxl);
        }
        auto next = solve_power_flow(model, controls_from(model, s, cfg.oltc), s.v, s.theta, cfg.power_flow);
        if (!next.converged) {
            traj.collapsed = true;
            traj.collapse_time = t;
            break;
        }
        pf = std::move(next);
        s.v = pf.v;
        s.theta = pf.theta;
        traj.max_mismatch = std::max(traj.max_mismatch, pf.max_mismatch);
        append_features(traj.features, pf);
        traj.t_end = t;
        if (cfg.record_devices) {
            std::vector<int> pos;
            for (const auto& o : s.oltc) pos.push_back(o.position);
            traj.tap_positions.push_back(std::move(pos));
            std::vector<bool> oxl;
            for (const auto& x : s.oxl) oxl.push_back(x.tripped);
            traj.oxl_tripped.push_back(std::move(oxl));
        }
        bool low = false;
        for (auto m : model.monitored) low = low || pf.v(m) < cfg.collapse_voltage;
        if (low) {
            traj.collapsed = true;
            traj.collapse_time = t;
            break;
        }
    }
    traj.final_v = pf.v;
    return traj;
}

}  // namespace vip::grid
