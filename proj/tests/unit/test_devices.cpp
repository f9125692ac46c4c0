#include <doctest.h>

#include <vector>

#include "vip/grid/devices.hpp"

using namespace vip::grid;

TEST_CASE("tap changer inside the deadband does nothing") {
    OltcState s;
    s.timer = 7.0;
    s.direction = 1;
    const auto r = step_oltc(s, 1.00, 1.0);
    CHECK_FALSE(r.tap_changed);
    CHECK(r.state.timer == 0.0);
    CHECK(r.state.position == 0);
}

TEST_CASE("first tap move happens on the tenth second of undervoltage") {
    OltcState s;
    for (int k = 1; k <= 9; ++k) {
        const auto r = step_oltc(s, 0.95, 1.0);
        CHECK_FALSE(r.tap_changed);
        s = r.state;
    }
    const auto r = step_oltc(s, 0.95, 1.0);
    CHECK(r.tap_changed);
    CHECK(r.state.tap({}) == doctest::Approx(1.01));
}

TEST_CASE("later moves follow the shorter delay") {
    OltcState s;
    std::vector<int> move_times;
    for (int t = 1; t <= 30; ++t) {
        const auto r = step_oltc(s, 0.95, 1.0);
        if (r.tap_changed) move_times.push_back(t);
        s = r.state;
    }
    CHECK(move_times == std::vector<int>{10, 15, 20, 25, 30});
}

TEST_CASE("overvoltage lowers the tap") {
    OltcState s;
    for (int t = 0; t < 10; ++t) s = step_oltc(s, 1.05, 1.0).state;
    CHECK(s.position == -1);
}

TEST_CASE("tap saturates at the upper limit") {
    OltcParams p;
    OltcState s;
    s.position = p.max_position;
    CHECK(s.tap(p) == doctest::Approx(1.15));
    for (int t = 0; t < 40; ++t) {
        const auto r = step_oltc(s, 0.95, 1.0, p);
        CHECK_FALSE(r.tap_changed);
        s = r.state;
    }
    CHECK(s.position == p.max_position);
    CHECK(s.saturated(p));
}

TEST_CASE("tap positions never decrease under sustained undervoltage") {
    OltcState s;
    int last = s.position;
    for (int t = 0; t < 600; ++t) {
        s = step_oltc(s, 0.9, 1.0).state;
        CHECK(s.position >= last);
        last = s.position;
    }
    CHECK(last == OltcParams{}.max_position);
}

TEST_CASE("field current limiter") {
    const double q_max = 1.0;

    SUBCASE("never trips within limits") {
        OxlState s;
        for (int t = 0; t < 1000; ++t) s = step_oxl(s, q_max, q_max, 1.0);
        CHECK_FALSE(s.tripped);
    }
    SUBCASE("trips on the twentieth second of overload") {
        OxlState s;
        for (int t = 1; t <= 19; ++t) {
            s = step_oxl(s, 1.1 * q_max, q_max, 1.0);
            CHECK_FALSE(s.tripped);
        }
        s = step_oxl(s, 1.1 * q_max, q_max, 1.0);
        CHECK(s.tripped);
    }
    SUBCASE("relief resets the timer") {
        OxlState s;
        for (int t = 0; t < 19; ++t) s = step_oxl(s, 1.1 * q_max, q_max, 1.0);
        s = step_oxl(s, 0.9 * q_max, q_max, 1.0);
        for (int t = 0; t < 19; ++t) s = step_oxl(s, 1.1 * q_max, q_max, 1.0);
        CHECK_FALSE(s.tripped);
    }
    SUBCASE("tripping latches") {
        OxlState s;
        for (int t = 0; t < 20; ++t) s = step_oxl(s, 2.0, q_max, 1.0);
        REQUIRE(s.tripped);
        s = step_oxl(s, 0.0, q_max, 1.0);
        CHECK(s.tripped);
    }
}
