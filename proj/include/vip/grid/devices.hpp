#pragma once

namespace vip::grid {

/// On-load tap changer control settings. The tap ratio multiplies the
/// secondary (load-side) voltage, so raising the tap raises the controlled
/// voltage.
struct OltcParams {
    double deadband_low = 0.99;
    double deadband_high = 1.01;
    double first_delay = 10.0;  ///< s before the first move of an excursion
    double next_delay = 5.0;    ///< s between subsequent moves
    double step = 0.01;
    int min_position = -15;  ///< tap = 1 + position * step
    int max_position = 15;
};

struct OltcState {
    int position = 0;
    double timer = 0.0;
    int direction = 0;   ///< +1 raising, -1 lowering, 0 idle
    bool moved = false;  ///< a move already happened in the current excursion

    [[nodiscard]] double tap(const OltcParams& p) const { return 1.0 + position * p.step; }
    [[nodiscard]] bool saturated(const OltcParams& p) const {
        return (direction > 0 && position >= p.max_position) || (direction < 0 && position <= p.min_position);
    }
};

struct OltcStep {
    OltcState state;
    bool tap_changed = false;
};

/// Advances the tap changer by dt seconds given the controlled (secondary)
/// voltage measured at the start of the step.
OltcStep step_oltc(const OltcState& state, double v_controlled, double dt, const OltcParams& params = {});

struct OxlParams {
    double delay = 20.0;  ///< s of continuous overload before limiting
};

struct OxlState {
    double timer = 0.0;
    bool tripped = false;  ///< latched: generator held at q_max as a PQ source
};

/// Advances an overexcitation limiter. Once tripped the state never resets.
OxlState step_oxl(const OxlState& state, double q_output, double q_max, double dt, const OxlParams& params = {});

}  // namespace vip::grid
