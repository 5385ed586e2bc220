#pragma once

#include <cmath>

#include "wpr/analytic.hpp"
#include "wpr/errors.hpp"
#include "wpr/receiver.hpp"

namespace wpr {

/// Per-cycle gate command: pulse width D and delay t_f after the positive
/// zero crossing of i_Ls. phi is the resulting PWM phase.
struct ModulationCommand {
    double duty = 0.5;
    double t_f = 0.0;
    double phi = 0.0;
    bool gate_enabled = true;  ///< false models a missing synchronisation edge
};

inline ModulationCommand make_command(double duty, double t_f, const ValidatedParams& p) {
    ModulationCommand c;
    c.duty = duty;
    c.t_f = t_f;
    c.phi = phase_angle(duty, p.f_s() * t_f);
    return c;
}

struct GateTiming {
    double gate_on = 0.0;
    double gate_off = 0.0;
    double center_shift = 0.0;  ///< 0.5 D T_s + t_f, the triangular-carrier shift
};

/// Gate edges for the cycle starting at `cycle_start`. The pulse must end
/// within the same carrier period.
inline GateTiming sync_gate_timing(double cycle_start, const ModulationCommand& cmd,
                                   const ValidatedParams& p) {
    if (!(cmd.duty > 0.0 && cmd.duty < 1.0)) throw InvalidDuty("duty must lie in (0, 1)");
    if (!(cmd.t_f >= 0.0)) throw InvalidDuty("gate delay must be non-negative");
    const double T = p.t_period;
    if (cmd.duty + cmd.t_f / T > 1.0 + 1e-12)
        throw GateOverrun("gate pulse overruns the carrier period (D + f_s t_f = " +
                          std::to_string(cmd.duty + cmd.t_f / T) + ")");
    GateTiming g;
    g.gate_on = cycle_start + cmd.t_f;
    g.gate_off = g.gate_on + cmd.duty * T;
    g.center_shift = 0.5 * cmd.duty * T + cmd.t_f;
    return g;
}

}  // namespace wpr
