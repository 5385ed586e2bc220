#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wpr/errors.hpp"
#include "wpr/numeric.hpp"

namespace wpr {

/// Passive and source values of the receiver, SI base units.
struct ReceiverParams {
    double l_s = 0.0;       ///< secondary coil inductance [H]
    double c_s = 0.0;       ///< series compensation capacitor [F]
    double c_s1 = 0.0;      ///< switch output capacitance [F]
    double c_d1 = 0.0;      ///< diode junction capacitance [F]
    double c_o = 0.0;       ///< output capacitor [F]
    double r_load = 0.0;    ///< load resistance [Ohm]
    double f_s = 0.0;       ///< carrier / resonant frequency [Hz]
    double i_ls_amp = 0.0;  ///< peak of the sinusoidal coil current [A]
    double r_ls_esr = 0.0;  ///< coil ESR, only used by the sizing rules [Ohm]
};

/// Relative resonance mismatch above which validate() warns.
inline constexpr double resonance_warning_threshold = 0.02;

struct ValidatedParams {
    ReceiverParams raw;
    double omega = 0.0;     ///< 2 pi f_s [rad/s]
    double c_sum = 0.0;     ///< c_s1 + c_d1 [F]
    double t_period = 0.0;  ///< 1 / f_s [s]
    double resonance_mismatch = 0.0;
    std::vector<std::string> warnings;

    double l_s() const noexcept { return raw.l_s; }
    double c_s() const noexcept { return raw.c_s; }
    double c_s1() const noexcept { return raw.c_s1; }
    double c_d1() const noexcept { return raw.c_d1; }
    double c_o() const noexcept { return raw.c_o; }
    double r_load() const noexcept { return raw.r_load; }
    double f_s() const noexcept { return raw.f_s; }
    double i_ls_amp() const noexcept { return raw.i_ls_amp; }
};

namespace detail {
inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw NonPositiveParameter(name);
}
inline void require_non_negative(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw NonPositiveParameter(name);
}
}  // namespace detail

/// Checks positivity, derives omega / c_sum / t_period and flags a
/// series-resonance mismatch above 2 %. A zero coil current is accepted
/// (decoupled coils); every other field must be strictly positive.
inline ValidatedParams validate(const ReceiverParams& raw) {
    detail::require_positive(raw.l_s, "l_s");
    detail::require_positive(raw.c_s, "c_s");
    detail::require_positive(raw.c_s1, "c_s1");
    detail::require_positive(raw.c_d1, "c_d1");
    detail::require_positive(raw.c_o, "c_o");
    detail::require_positive(raw.r_load, "r_load");
    detail::require_positive(raw.f_s, "f_s");
    detail::require_non_negative(raw.i_ls_amp, "i_ls_amp");
    detail::require_non_negative(raw.r_ls_esr, "r_ls_esr");

    ValidatedParams v;
    v.raw = raw;
    v.omega = numeric::two_pi * raw.f_s;
    v.c_sum = raw.c_s1 + raw.c_d1;
    v.t_period = 1.0 / raw.f_s;
    const double f_res = 1.0 / (numeric::two_pi * std::sqrt(raw.l_s * raw.c_s));
    v.resonance_mismatch = std::abs(f_res - raw.f_s) / raw.f_s;
    if (v.resonance_mismatch > resonance_warning_threshold) {
        v.warnings.push_back("series resonance " + std::to_string(f_res) + " Hz deviates " +
                             std::to_string(100.0 * v.resonance_mismatch) + " % from f_s");
    }
    return v;
}

/// Same receiver with a different load and coil-current amplitude; used by
/// transient scenarios that vary both cycle by cycle.
inline ValidatedParams with_conditions(const ValidatedParams& p, double r_load, double i_ls_amp) {
    detail::require_positive(r_load, "r_load");
    detail::require_non_negative(i_ls_amp, "i_ls_amp");
    ValidatedParams out = p;
    out.raw.r_load = r_load;
    out.raw.i_ls_amp = i_ls_amp;
    return out;
}

// ---------------------------------------------------------------------------
// Component sizing

/// Smallest coil inductance whose quality factor reaches q_target.
inline double size_inductor(double q_target, double r_esr, double f_s) {
    detail::require_positive(q_target, "q_target");
    detail::require_positive(r_esr, "r_esr");
    detail::require_positive(f_s, "f_s");
    return q_target * r_esr / (numeric::two_pi * f_s);
}

/// Series capacitor that resonates with l_s at f_s.
inline double size_series_cap(double l_s, double f_s) {
    detail::require_positive(l_s, "l_s");
    detail::require_positive(f_s, "f_s");
    const double w = numeric::two_pi * f_s;
    return 1.0 / (w * w * l_s);
}

/// Output capacitance that holds the ripple under ripple_frac * v_o when the
/// whole positive half-cycle charge lands on C_o.
inline double min_output_cap(double i_ls_amp, double ripple_frac, double v_o, double f_s) {
    detail::require_positive(i_ls_amp, "i_ls_amp");
    detail::require_positive(ripple_frac, "ripple_frac");
    detail::require_positive(v_o, "v_o");
    detail::require_positive(f_s, "f_s");
    if (ripple_frac >= 1.0) throw NonPositiveParameter("ripple_frac");
    return i_ls_amp / (ripple_frac * v_o * std::numbers::pi * f_s);
}

/// Ripple bound |I_Ls| / (pi f_s C_o): half-cycle charge over C_o.
inline double ripple_estimate(double i_ls_amp, double f_s, double c_o) {
    detail::require_positive(i_ls_amp, "i_ls_amp");
    detail::require_positive(f_s, "f_s");
    detail::require_positive(c_o, "c_o");
    return i_ls_amp / (std::numbers::pi * f_s * c_o);
}

// ---------------------------------------------------------------------------
// Named configurations

/// The hardware prototype: 172 uH coil, 3300 pF + 330 pF, 4.5 nF device
/// capacitances, 1000 uF output, 38.09 Ohm load at 2.35 A coil current.
inline ReceiverParams table2_params() {
    ReceiverParams p;
    p.l_s = 172e-6;
    p.c_s = 3.63e-9;
    p.c_s1 = 4.5e-9;
    p.c_d1 = 4.5e-9;
    p.c_o = 1000e-6;
    p.r_load = 38.09;
    p.f_s = 200e3;
    p.i_ls_amp = 2.35;
    p.r_ls_esr = 2.16;
    return p;
}

/// Small-signal design conditions: 1 A, 30 Ohm, 100 uF, same switch network.
inline ReceiverParams fig7_params() {
    ReceiverParams p = table2_params();
    p.c_o = 100e-6;
    p.r_load = 30.0;
    p.i_ls_amp = 1.0;
    return p;
}

}  // namespace wpr
