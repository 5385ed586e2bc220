#pragma once

// Closed-form steady-state and commutation-timing relations of the
// semi-active class-D receiver driven by a sinusoidal coil current.
//
// Time origin: the positive-going zero crossing of i_Ls. The switch gate
// rises t_f after it and stays high for D * T_s.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "wpr/errors.hpp"
#include "wpr/numeric.hpp"
#include "wpr/receiver.hpp"

namespace wpr {

struct OperatingPoint {
    double duty = 0.0;
    double t_f = 0.0;               ///< State-I fall interval / gate delay [s]
    double v_o = 0.0;               ///< output voltage [V]
    double phase_delay_norm = 0.0;  ///< f_s * t_f
    bool regulable = false;         ///< duty within the admissible range at this t_f
    int iterations = 0;
};

struct DutyBounds {
    double d_min = 0.0;
    double d_max = 0.0;

    bool contains(double d) const noexcept { return d >= d_min && d <= d_max; }
    double clamp(double d) const noexcept { return std::clamp(d, d_min, d_max); }
};

inline double input_current(double t, const ValidatedParams& p) {
    return p.i_ls_amp() * std::sin(p.omega * t);
}

// ---------------------------------------------------------------------------
// Commutation times

/// Small-angle State-I fall time sqrt(C_sum v_o / (pi f_s |I_Ls|)).
inline double fall_time_approx(double c_sum, double v_o, double f_s, double i_ls_amp) {
    detail::require_positive(c_sum, "c_sum");
    detail::require_positive(f_s, "f_s");
    detail::require_non_negative(v_o, "v_o");
    if (v_o == 0.0) return 0.0;
    detail::require_positive(i_ls_amp, "i_ls_amp");
    return std::sqrt(c_sum * v_o / (std::numbers::pi * f_s * i_ls_amp));
}

inline double fall_time_approx(const ValidatedParams& p, double v_o) {
    return fall_time_approx(p.c_sum, v_o, p.f_s(), p.i_ls_amp());
}

/// Exact State-I fall time: smallest t > 0 with
/// 1 - cos(omega t) = omega C_sum v_o / |I_Ls| solved for the first root in (0, T_s/2].
inline double fall_time_exact(double c_sum, double v_o, double f_s, double i_ls_amp) {
    detail::require_positive(c_sum, "c_sum");
    detail::require_positive(f_s, "f_s");
    detail::require_non_negative(v_o, "v_o");
    if (v_o == 0.0) return 0.0;
    const double omega = numeric::two_pi * f_s;
    if (!(i_ls_amp > 0.0)) throw CommutationImpossible("no coil current to discharge C_S1");
    const double k = omega * c_sum * v_o / i_ls_amp;
    if (k > 2.0) throw CommutationImpossible("commutation charge exceeds one half-cycle (k = " +
                                             std::to_string(k) + ")");
    return std::acos(1.0 - k) / omega;
}

inline double fall_time_exact(const ValidatedParams& p, double v_o) {
    return fall_time_exact(p.c_sum, v_o, p.f_s(), p.i_ls_amp());
}

// ---------------------------------------------------------------------------
// Duty range and steady state

inline DutyBounds duty_bounds(double phase_delay_norm) {
    if (!(phase_delay_norm >= 0.0)) throw NonPositiveParameter("phase_delay_norm");
    DutyBounds b{0.5 - phase_delay_norm, 1.0 - 2.0 * phase_delay_norm};
    if (b.d_min > b.d_max) throw EmptyDutyRange("duty range empty for f_s t_f = " +
                                                std::to_string(phase_delay_norm));
    return b;
}

/// State-IV rise time from the gate falling edge until v_CD1 reaches zero.
/// The node is discharged by the negative half-cycle, so the end angle is
/// 2 pi - arccos(cos(2 pi (D + f_s t_f)) + omega C_sum v_o / |I_Ls|).
inline double rise_time(double duty, double phase_delay_norm, double f_s, double c_sum, double v_o,
                        double i_ls_amp) {
    if (!duty_bounds(phase_delay_norm).contains(duty))
        throw DutyOutOfBounds("duty " + std::to_string(duty) + " outside admissible range");
    const double omega = numeric::two_pi * f_s;
    const double off_angle = numeric::two_pi * (duty + phase_delay_norm);
    double arg = std::cos(off_angle);
    if (c_sum > 0.0 && v_o > 0.0) {
        if (!(i_ls_amp > 0.0)) throw ArccosDomain("no coil current to charge C_S1");
        arg += omega * c_sum * v_o / i_ls_amp;
    }
    if (arg > 1.0 || arg < -1.0)
        throw ArccosDomain("rise does not complete within the cycle (arccos argument " +
                           std::to_string(arg) + ")");
    const double end_angle = numeric::two_pi - std::acos(arg);
    return (end_angle - off_angle) / omega;
}

inline double rise_time(const ValidatedParams& p, const OperatingPoint& op) {
    return rise_time(op.duty, op.phase_delay_norm, p.f_s(), p.c_sum, op.v_o, p.i_ls_amp());
}

/// Averaged steady-state output for a given duty and normalised gate delay.
/// Evaluated for any duty; negative values mean the point is unreachable.
inline double steady_state_vo(double i_ls_amp, double r_load, double duty, double phase_delay_norm) {
    const double k = i_ls_amp * r_load / numeric::two_pi;
    const double theta = numeric::two_pi * phase_delay_norm;
    return k * (std::cos(theta) - std::cos(numeric::two_pi * duty + theta));
}

/// Duty maximising the output for a given delay.
inline double optimal_duty(double phase_delay_norm) { return 0.5 - phase_delay_norm; }

/// Loss of peak output caused by the device capacitances: difference between
/// the zero-delay maximum |I| R / pi and the maximum at this delay.
inline double resonant_cap_voltage_drop(double i_ls_amp, double r_load, double phase_delay_norm) {
    detail::require_non_negative(i_ls_amp, "i_ls_amp");
    detail::require_positive(r_load, "r_load");
    const double k = i_ls_amp * r_load / numeric::two_pi;
    return k * (1.0 - std::cos(numeric::two_pi * phase_delay_norm));
}

/// Gate phase relative to the current zero crossing, wrapped to [0, 2 pi).
inline double phase_angle(double duty, double phase_delay_norm) {
    double phi = numeric::two_pi * phase_delay_norm + duty * std::numbers::pi;
    phi = std::fmod(phi, numeric::two_pi);
    if (phi < 0.0) phi += numeric::two_pi;
    return phi;
}

/// Inverse of steady_state_vo on the regulable branch (D >= 0.5 - f_s t_f).
inline double duty_for_voltage(double i_ls_amp, double r_load, double v_target,
                               double phase_delay_norm) {
    detail::require_positive(i_ls_amp, "i_ls_amp");
    detail::require_positive(r_load, "r_load");
    const double k = i_ls_amp * r_load / numeric::two_pi;
    const double theta = numeric::two_pi * phase_delay_norm;
    const double arg = std::cos(theta) - v_target / k;
    if (arg < -1.0 || arg > 1.0)
        throw NumericalError("output " + std::to_string(v_target) + " V not reachable");
    return 1.0 - phase_delay_norm - std::acos(arg) / numeric::two_pi;
}

// ---------------------------------------------------------------------------
// Self-consistent operating point

enum class FallTimeModel { approximate, exact };

struct SolveOptions {
    FallTimeModel model = FallTimeModel::approximate;
    double tolerance = 1e-6;  ///< successive v_o change [V]
    int max_iterations = 100;
};

/// Fixed-point iteration v_o -> t_f(v_o) -> steady_state_vo(D, f_s t_f).
/// Outputs below zero are clamped: the rectifier cannot go negative.
inline OperatingPoint solve_operating_point(const ValidatedParams& p, double duty,
                                            const SolveOptions& opt = {}) {
    if (!(duty > 0.0 && duty < 1.0)) throw InvalidDuty("duty must lie in (0, 1)");
    OperatingPoint op;
    op.duty = duty;
    if (p.i_ls_amp() == 0.0) {
        op.regulable = duty_bounds(0.0).contains(duty);
        return op;
    }
    auto fall = [&](double v) {
        return opt.model == FallTimeModel::exact ? fall_time_exact(p, v) : fall_time_approx(p, v);
    };
    double v = std::max(0.0, steady_state_vo(p.i_ls_amp(), p.r_load(), duty, 0.0));
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const double t_f = fall(v);
        const double next =
            std::max(0.0, steady_state_vo(p.i_ls_amp(), p.r_load(), duty, p.f_s() * t_f));
        if (std::abs(next - v) < opt.tolerance) {
            op.t_f = fall(next);
            op.phase_delay_norm = p.f_s() * op.t_f;
            op.v_o = std::max(
                0.0, steady_state_vo(p.i_ls_amp(), p.r_load(), duty, op.phase_delay_norm));
            op.iterations = it;
            const double pd = op.phase_delay_norm;
            op.regulable = pd < 0.5 && duty_bounds(pd).contains(duty);
            return op;
        }
        v = next;
    }
    throw NoConvergence("operating point did not converge in " +
                        std::to_string(opt.max_iterations) + " iterations");
}

/// Explicit operating point with a pinned delay (no v_o <-> t_f coupling).
inline OperatingPoint pinned_operating_point(const ValidatedParams& p, double duty,
                                             double phase_delay_norm) {
    if (!(duty > 0.0 && duty < 1.0)) throw InvalidDuty("duty must lie in (0, 1)");
    OperatingPoint op;
    op.duty = duty;
    op.phase_delay_norm = phase_delay_norm;
    op.t_f = phase_delay_norm / p.f_s();
    op.v_o = steady_state_vo(p.i_ls_amp(), p.r_load(), duty, phase_delay_norm);
    op.regulable = phase_delay_norm < 0.5 && duty_bounds(phase_delay_norm).contains(duty);
    return op;
}

}  // namespace wpr
