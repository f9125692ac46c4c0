#include <doctest.h>

#include <cstring>

#include "helpers.hpp"
#include "vip/common/error.hpp"
#include "vip/grid/simulator.hpp"
#include "vip/scenario/sampling.hpp"

using namespace vip;
using namespace vip::grid;

namespace {

OperatingCondition scaled_loads(const GridModel& m, double factor) {
    auto oc = base_operating_condition(m);
    for (auto& f : oc.load_factors) f = factor;
    return oc;
}

ContingencySchedule corridor_c1(int t2) {
    ContingencySchedule s;
    s.events = {{66, Contingency::trip_branch("B3-B5a")}, {t2, Contingency::trip_branch("B3-B5b")}};
    return s;
}

}  // namespace

TEST_CASE("zero injections give a flat voltage profile") {
    auto m = load_grid(testing::shipped_grid());
    for (auto& b : m.branches) b.r = 0.0;
    for (auto& b : m.buses) b.shunt_b = 0.0;
    for (auto& l : m.loads) l.p0 = l.q0 = 0.0;
    for (auto& g : m.generators) {
        g.p = 0.0;
        g.v = 1.0;
    }
    const auto r = solve_power_flow(m, default_controls(m), {}, {});
    REQUIRE(r.converged);
    for (Eigen::Index i = 0; i < r.v.size(); ++i) {
        CHECK(r.v(i) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(r.theta(i)) < 1e-12);
    }
    for (std::size_t k = 0; k < m.branches.size(); ++k) {
        CHECK(std::abs(r.p_from[k]) < 1e-12);
        CHECK(std::abs(r.q_from[k]) < 1e-12);
    }
}

TEST_CASE("base case is feasible") {
    const auto m = load_grid(testing::shipped_grid());
    CHECK(check_feasibility(m, base_operating_condition(m)));
}

TEST_CASE("heavy load with the corridors mostly out is infeasible") {
    auto m = load_grid(testing::shipped_grid());
    for (const char* id : {"B3-B5a", "B3-B5b", "B4-B6a"}) m = apply_contingency(m, Contingency::trip_branch(id));
    CHECK(check_feasibility(m, scaled_loads(m, 1.0)));
    CHECK_FALSE(check_feasibility(m, scaled_loads(m, 1.5)));
    CHECK_THROWS_AS(simulate_case(m, scaled_loads(m, 1.5), {}), Error);
}

TEST_CASE("no contingency keeps the equilibrium for the whole horizon") {
    const auto m = load_grid(testing::shipped_grid());
    vip::Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto oc = scenario::sample_operating_condition(m, rng);
        const auto traj = simulate_case(m, oc, {});
        CHECK(traj.t_end == 560);
        CHECK_FALSE(traj.collapsed);
        CHECK(traj.features.size() == 560 * traj.num_features);
        for (int t = 2; t <= 560; ++t) {
            for (std::size_t j = 0; j < traj.num_features; ++j) {
                REQUIRE(std::abs(traj.snapshot(t)[j] - traj.snapshot(1)[j]) <= 1e-6f);
            }
        }
    }
}

TEST_CASE("converged steps balance power") {
    const auto m = load_grid(testing::shipped_grid());
    vip::Rng rng(8);
    const auto sched = scenario::ScheduleSampling::defaults();
    for (int trial = 0; trial < 10; ++trial) {
        const auto oc = scenario::sample_operating_condition(m, rng);
        const auto traj = simulate_case(m, oc, scenario::sample_schedule(m, rng, sched));
        CHECK(traj.max_mismatch <= 1e-8);
    }
}

TEST_CASE("snapshots before the first contingency match the undisturbed run") {
    const auto m = load_grid(testing::shipped_grid());
    const auto oc = base_operating_condition(m);
    const auto quiet = simulate_case(m, oc, {});
    const auto hit = simulate_case(m, oc, corridor_c1(90));
    CHECK(std::memcmp(quiet.snapshot(1), hit.snapshot(1), 65 * quiet.num_features * sizeof(float)) == 0);
    CHECK(std::memcmp(quiet.snapshot(66), hit.snapshot(66), quiet.num_features * sizeof(float)) != 0);
}

TEST_CASE("N-1 and N-1-1 runs agree until the second contingency") {
    const auto m = load_grid(testing::shipped_grid());
    const auto oc = base_operating_condition(m);
    const auto both = corridor_c1(85);
    const auto first = scenario::n1_schedule(both);
    const auto a = simulate_case(m, oc, first);
    const auto b = simulate_case(m, oc, both);
    CHECK(std::memcmp(a.snapshot(1), b.snapshot(1), 84 * a.num_features * sizeof(float)) == 0);
    CHECK(std::memcmp(a.snapshot(85), b.snapshot(85), a.num_features * sizeof(float)) != 0);
}

TEST_CASE("simulation is deterministic") {
    const auto m = load_grid(testing::shipped_grid());
    const auto oc = scaled_loads(m, 1.1);
    const auto a = simulate_case(m, oc, corridor_c1(80));
    const auto b = simulate_case(m, oc, corridor_c1(80));
    CHECK(a.features == b.features);
    CHECK(a.t_end == b.t_end);
}

TEST_CASE("losing both C1 corridor lines at 130% load collapses") {
    const auto m = load_grid(testing::shipped_grid());
    const auto traj = simulate_case(m, scaled_loads(m, 1.30), corridor_c1(80));
    CHECK(traj.collapsed);
    REQUIRE(traj.collapse_time.has_value());
    CHECK(*traj.collapse_time == 116);
    CHECK(traj.t_end <= 116);

    const auto milder = simulate_case(m, scaled_loads(m, 1.25), corridor_c1(80));
    CHECK_FALSE(milder.collapsed);
}

TEST_CASE("taps act after a corridor loss") {
    const auto m = load_grid(testing::shipped_grid());
    SimConfig cfg;
    cfg.record_devices = true;
    const auto traj = simulate_case(m, base_operating_condition(m), corridor_c1(80), cfg);
    REQUIRE(traj.tap_positions.size() == static_cast<std::size_t>(traj.t_end));
    CHECK(traj.tap_positions[64] == traj.tap_positions[0]);
    bool moved = false;
    for (const auto& pos : traj.tap_positions) moved = moved || pos != traj.tap_positions[0];
    CHECK(moved);
}
