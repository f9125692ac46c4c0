#include <doctest.h>

#include "helpers.hpp"
#include "vip/common/error.hpp"
#include "vip/grid/grid_model.hpp"
#include "vip/grid/simulator.hpp"

using namespace vip;
using namespace vip::grid;

TEST_CASE("shipped grid loads and validates") {
    const auto m = load_grid(testing::shipped_grid());
    CHECK(m.buses.size() == 11);
    CHECK(m.branches.size() == 13);
    CHECK(m.oltc_branches().size() == 3);
    CHECK(m.connected());
    CHECK_NOTHROW(m.validate());
    CHECK(m.buses[m.slack_bus()].id == "B1");
    REQUIRE(m.monitored.size() == 3);
    CHECK(m.buses[m.monitored[0]].id == "B5");
    CHECK(m.buses[m.monitored[1]].id == "B6");
    CHECK(m.buses[m.monitored[2]].id == "B7");
}

TEST_CASE("feature vector layout") {
    const auto m = load_grid(testing::shipped_grid());
    const auto names = feature_names(m);
    CHECK(names.size() == 2 * m.buses.size() + 2 * m.branches.size());
    CHECK(feature_count(m) == names.size());
    CHECK(names.front() == "V:B1");
    CHECK(names[m.buses.size()] == "theta:B1");
    CHECK(names[2 * m.buses.size()] == "P:B1-B3");
    CHECK(names[2 * m.buses.size() + 1] == "Q:B1-B3");
}

TEST_CASE("json round trip keeps the model") {
    const auto m = load_grid(testing::shipped_grid());
    const auto again = grid_from_json(grid_to_json(m));
    CHECK(grid_to_json(again) == grid_to_json(m));
}

TEST_CASE("contingencies") {
    const auto m = load_grid(testing::shipped_grid());

    SUBCASE("branch trip removes one branch") {
        const auto after = apply_contingency(m, Contingency::trip_branch("B3-B5a"));
        CHECK(after.in_service_branch_count() == m.in_service_branch_count() - 1);
        CHECK_FALSE(after.branches[after.branch_index("B3-B5a")].in_service);
    }
    SUBCASE("tripping twice is an error") {
        const auto after = apply_contingency(m, Contingency::trip_branch("B3-B5a"));
        try {
            (void)apply_contingency(after, Contingency::trip_branch("B3-B5a"));
            FAIL("expected AlreadyTripped");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::AlreadyTripped);
        }
    }
    SUBCASE("islanding branch is refused") {
        try {
            (void)apply_contingency(m, Contingency::trip_branch("T5-9"));
            FAIL("expected IslandingDetected");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::IslandingDetected);
        }
    }
    SUBCASE("unknown element") {
        try {
            (void)apply_contingency(m, Contingency::trip_branch("nope"));
            FAIL("expected UnknownElement");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::UnknownElement);
        }
    }
    SUBCASE("generator trip turns the bus into a load bus") {
        const auto after = apply_contingency(m, Contingency::trip_generator("G8"));
        const auto& g = after.generators[after.generator_index("G8")];
        CHECK_FALSE(g.in_service);
        CHECK(g.p == 0.0);
        CHECK(after.buses[after.bus_index("B8")].kind == BusKind::PQ);
    }
}

TEST_CASE("invalid models are rejected") {
    auto doc = grid_to_json(load_grid(testing::shipped_grid()));
    doc["branches"][0]["x"] = 0.0;
    CHECK_THROWS_AS(grid_from_json(doc).validate(), Error);
}
