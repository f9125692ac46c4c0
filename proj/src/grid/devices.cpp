#include "vip/grid/devices.hpp"

namespace vip::grid {

OltcStep step_oltc(const OltcState& state, double v_controlled, double dt, const OltcParams& params) {
    OltcStep out{state, false};
    auto& s = out.state;
    if (v_controlled >= params.deadband_low && v_controlled <= params.deadband_high) {
        s.timer = 0.0;
        s.direction = 0;
        s.moved = false;
        return out;
    }
    const int dir = v_controlled < params.deadband_low ? 1 : -1;
    if (dir != s.direction) {
        s.direction = dir;
        s.timer = 0.0;
        s.moved = false;
    }
    const double delay = s.moved ? params.next_delay : params.first_delay;
    s.timer += dt;
    if (s.timer < delay) return out;
    const int target = s.position + dir;
    if (target > params.max_position || target < params.min_position) {
        s.timer = delay;  // saturated: hold, ready to move if the limit is ever released
        return out;
    }
    s.position = target;
    s.timer = 0.0;
    s.moved = true;
    out.tap_changed = true;
    return out;
}

OxlState step_oxl(const OxlState& state, double q_output, double q_max, double dt, const OxlParams& params) {
    OxlState s = state;
    if (s.tripped) return s;
    if (q_output > q_max) {
        s.timer += dt;
        if (s.timer >= params.delay) s.tripped = true;
    } else {
        s.timer = 0.0;
    }
    return s;
}

}  // namespace vip::grid
