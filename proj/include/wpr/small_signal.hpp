#pragma once

// Linearised control-to-output model and the pole-cancelling PI design.
//
//   G(s) = |I| R sin(2 pi D + 2 pi f t_f) / (R C_o s + 1)
//   C(s) = k_p + k_i / s,   k_p = 2 pi f_c C_o / (|I| sin(.)),  k_i = k_p / (R C_o)
//
// With k_i / k_p = 1 / (R C_o) the PI zero cancels the plant pole and the
// loop reduces to 2 pi f_c / s.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "wpr/analytic.hpp"
#include "wpr/averaged.hpp"
#include "wpr/errors.hpp"
#include "wpr/numeric.hpp"
#include "wpr/parallel.hpp"
#include "wpr/receiver.hpp"

namespace wpr {

using cplx = std::complex<double>;

struct TransferFunction1P {
    double dc_gain = 0.0;      ///< signed static gain [V per unit duty]
    double pole_hz = 1.0;      ///< real pole [Hz]
    int integrator_count = 0;  ///< pure integrators in series

    cplx at(double f_hz) const {
        const cplx s(0.0, numeric::two_pi * f_hz);
        cplx h = dc_gain / (1.0 + cplx(0.0, f_hz / pole_hz));
        for (int i = 0; i < integrator_count; ++i) h /= s;
        return h;
    }

    /// Phase at f -> 0 under the convention that a negative gain is -180 deg.
    double low_frequency_phase_deg() const {
        return (dc_gain < 0.0 ? -180.0 : 0.0) - 90.0 * integrator_count;
    }
};

struct PiGains {
    double k_p = 0.0;
    double k_i = 0.0;  ///< [1/s]
    double d_min = 0.0;
    double d_max = 1.0;

    cplx at(double f_hz) const {
        return k_p + k_i / cplx(0.0, numeric::two_pi * f_hz);
    }
};

struct BodePoint {
    double f_hz = 0.0;
    double mag_db = 0.0;
    double phase_deg = 0.0;
};

/// Open loop plant * PI.
struct LoopTf {
    TransferFunction1P plant;
    PiGains gains;

    cplx at(double f_hz) const { return plant.at(f_hz) * gains.at(f_hz); }
    cplx closed_at(double f_hz) const {
        const cplx l = at(f_hz);
        return l / (1.0 + l);
    }
};

namespace detail {

inline double wrap_near(double phase_deg, double reference_deg) {
    while (phase_deg - reference_deg > 180.0) phase_deg -= 360.0;
    while (phase_deg - reference_deg <= -180.0) phase_deg += 360.0;
    return phase_deg;
}

/// Magnitude/phase on a grid; phase is unwrapped point to point, the first
/// point taken on the branch nearest `start_phase_deg`.
template <class H>
std::vector<BodePoint> bode_of(H&& h, const std::vector<double>& f_grid, double start_phase_deg) {
    std::vector<BodePoint> out;
    out.reserve(f_grid.size());
    double prev = start_phase_deg;
    for (std::size_t i = 0; i < f_grid.size(); ++i) {
        if (!(f_grid[i] > 0.0) || (i > 0 && f_grid[i] <= f_grid[i - 1]))
            throw NonPositiveParameter("frequency grid must be positive and ascending");
        const cplx v = h(f_grid[i]);
        const double ph = wrap_near(std::arg(v) * 180.0 / std::numbers::pi, prev);
        out.push_back({f_grid[i], 20.0 * std::log10(std::abs(v)), ph});
        prev = ph;
    }
    return out;
}

inline double gain_sine(const OperatingPoint& op) {
    return std::sin(numeric::two_pi * (op.duty + op.phase_delay_norm));
}

}  // namespace detail

inline TransferFunction1P plant_tf(const ValidatedParams& p, const OperatingPoint& op) {
    const double s = detail::gain_sine(op);
    if (std::abs(s) < 1e-9)
        throw ZeroGainOperatingPoint("d v_o / dD vanishes at this operating point");
    TransferFunction1P tf;
    tf.dc_gain = p.i_ls_amp() * p.r_load() * s;
    tf.pole_hz = 1.0 / (numeric::two_pi * p.r_load() * p.c_o());
    return tf;
}

inline std::vector<BodePoint> bode(const TransferFunction1P& tf, const std::vector<double>& f_grid) {
    return detail::bode_of([&](double f) { return tf.at(f); }, f_grid,
                           tf.low_frequency_phase_deg());
}

inline std::vector<BodePoint> bode(const LoopTf& loop, const std::vector<double>& f_grid) {
    const double k = loop.plant.dc_gain * (loop.gains.k_i != 0.0 ? loop.gains.k_i : loop.gains.k_p);
    const double start = (k < 0.0 ? -180.0 : 0.0) - (loop.gains.k_i != 0.0 ? 90.0 : 0.0) -
                         90.0 * loop.plant.integrator_count;
    return detail::bode_of([&](double f) { return loop.at(f); }, f_grid, start);
}

inline std::vector<BodePoint> closed_loop_bode(const LoopTf& loop, const std::vector<double>& f_grid) {
    return detail::bode_of([&](double f) { return loop.closed_at(f); }, f_grid, 0.0);
}

/// Logarithmic grid with `per_decade` points per decade, both ends included.
inline std::vector<double> log_grid(double f_lo, double f_hi, int per_decade) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || per_decade < 1) throw NonPositiveParameter("grid");
    const double decades = std::log10(f_hi / f_lo);
    const int n = static_cast<int>(std::lround(decades * per_decade));
    std::vector<double> g;
    for (int i = 0; i <= n; ++i)
        g.push_back(f_lo * std::pow(10.0, decades * static_cast<double>(i) / n));
    return g;
}

/// PI gains placing the loop crossover at f_c with the zero on the plant pole.
inline PiGains design_pi(const ValidatedParams& p, const OperatingPoint& op, double f_c) {
    detail::require_positive(f_c, "f_c");
    const double s = detail::gain_sine(op);
    if (std::abs(s) < 1e-9 || !(p.i_ls_amp() > 0.0))
        throw ZeroGainOperatingPoint("cannot place crossover at a zero-gain operating point");
    PiGains g;
    g.k_p = numeric::two_pi * f_c * p.c_o() / (p.i_ls_amp() * s);
    g.k_i = g.k_p / (p.r_load() * p.c_o());
    const DutyBounds b = duty_bounds(op.phase_delay_norm);
    g.d_min = b.d_min;
    g.d_max = b.d_max;
    return g;
}

struct LoopMargins {
    double crossover_hz = 0.0;
    double phase_margin_deg = 0.0;
    double gain_at_10hz_db = 0.0;
};

/// Crossover from |L(j w)| = 1 solved in closed form: with
/// L = K (k_p s + k_i) / (s (tau s + 1)) the condition is the quadratic
/// tau^2 w^4 + (1 - K^2 k_p^2) w^2 - K^2 k_i^2 = 0 in w^2.
inline LoopMargins loop_margins(const TransferFunction1P& plant, const PiGains& gains) {
    if (plant.integrator_count != 0) throw NumericalError("plant must be a single real pole");
    const double tau = 1.0 / (numeric::two_pi * plant.pole_hz);
    const double kp = plant.dc_gain * gains.k_p;
    const double ki = plant.dc_gain * gains.k_i;
    const double a = tau * tau;
    const double b = 1.0 - kp * kp;
    const double c = -ki * ki;
    double w2 = 0.0;
    if (c == 0.0) {
        w2 = -b / a;
    } else {
        const double disc = std::sqrt(b * b - 4.0 * a * c);
        w2 = b > 0.0 ? (-2.0 * c) / (b + disc) : (-b + disc) / (2.0 * a);
    }
    if (!(w2 > 0.0) || !std::isfinite(w2)) throw NoCrossover("|L| never reaches 0 dB");
    LoopMargins m;
    m.crossover_hz = std::sqrt(w2) / numeric::two_pi;
    const LoopTf loop{plant, gains};
    m.phase_margin_deg = 180.0 + std::arg(loop.at(m.crossover_hz)) * 180.0 / std::numbers::pi;
    if (m.phase_margin_deg > 180.0) m.phase_margin_deg -= 360.0;
    m.gain_at_10hz_db = 20.0 * std::log10(std::abs(loop.at(10.0)));
    return m;
}

// ---------------------------------------------------------------------------
// Perturbation oracle on the averaged model

struct PerturbationOptions {
    double relative_amplitude = 1e-3;  ///< duty perturbation / D
    int steps_per_period = 256;
    double settle_time_constants = 5.0;
    int measure_periods = 2;
    bool parallel = true;
};

namespace detail {

/// First-harmonic response of v_o to a sinusoidal duty perturbation.
inline cplx perturbation_response(const ValidatedParams& p, const OperatingPoint& op, double f_hz,
                                  const PerturbationOptions& opt) {
    const double period = 1.0 / f_hz;
    const double tau = p.r_load() * p.c_o();
    const double amp = opt.relative_amplitude * op.duty;
    const double step = period / opt.steps_per_period;
    const double settle = std::ceil(opt.settle_time_constants * tau / period) * period;
    const int settle_steps = static_cast<int>(std::lround(settle / step));
    const int measure_steps = opt.measure_periods * opt.steps_per_period;

    const double pd = op.phase_delay_norm;
    double v = steady_state_vo(p.i_ls_amp(), p.r_load(), op.duty, pd);
    const double decay = std::exp(-step / tau);
    const double w = numeric::two_pi * f_hz;
    cplx acc(0.0, 0.0);
    for (int k = 0; k < settle_steps + measure_steps; ++k) {
        const double t0 = k * step;
        const double d = op.duty + amp * std::sin(w * (t0 + 0.5 * step));
        const double v_ss = steady_state_vo(p.i_ls_amp(), p.r_load(), d, pd);
        v = v_ss + (v - v_ss) * decay;
        if (k + 1 > settle_steps) {
            const double t1 = (k + 1) * step;
            acc += v * std::exp(cplx(0.0, -w * t1));
        }
    }
    const cplx v1 = acc * (2.0 / measure_steps);
    const cplx d1(0.0, -amp);  // amp * sin(w t) as a phasor
    return v1 / d1;
}

}  // namespace detail

/// "Simulated" Bode of the plant: inject a small sinusoidal duty into the
/// averaged model, wait out the transient and correlate at the drive
/// frequency. Frequency points run concurrently.
inline std::vector<BodePoint> perturb_bode_oracle(const ValidatedParams& p, const OperatingPoint& op,
                                                  const std::vector<double>& f_grid,
                                                  const PerturbationOptions& opt = {}) {
    std::vector<cplx> resp(f_grid.size());
    if (opt.parallel) {
        parallel_for(f_grid.size(), [&](std::size_t i) {
            resp[i] = detail::perturbation_response(p, op, f_grid[i], opt);
        });
    } else {
        for (std::size_t i = 0; i < f_grid.size(); ++i)
            resp[i] = detail::perturbation_response(p, op, f_grid[i], opt);
    }
    std::size_t idx = 0;
    const double s = detail::gain_sine(op);
    return detail::bode_of([&](double) { return resp[idx++]; }, f_grid, s < 0.0 ? -180.0 : 0.0);
}

}  // namespace wpr
