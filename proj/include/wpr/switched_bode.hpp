#pragma once

// Control-to-output response measured on the switched simulator. Much slower
// than the averaged oracle, so it is meant for a handful of spot frequencies.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "wpr/analytic.hpp"
#include "wpr/errors.hpp"
#include "wpr/numeric.hpp"
#include "wpr/parallel.hpp"
#include "wpr/simulator.hpp"
#include "wpr/small_signal.hpp"

namespace wpr {

struct SwitchedPerturbationOptions {
    double relative_amplitude = 1e-2;
    double settle_time_constants = 5.0;
    int measure_periods = 2;
};

/// First harmonic of the cycle-mean output under a sinusoidal duty, divided
/// by the duty phasor. f_s / f_hz must be an integer so that the window
/// holds whole perturbation periods.
inline cplx switched_perturbation_response(const ValidatedParams& p, const OperatingPoint& op,
                                           double f_hz, const SwitchedPerturbationOptions& opt = {}) {
    const double ratio = p.f_s() / f_hz;
    const auto per_period = static_cast<std::size_t>(std::llround(ratio));
    if (per_period < 4 || std::abs(ratio - static_cast<double>(per_period)) > 1e-9 * ratio)
        throw NonPeriodicWindow("f_s / f must be an integer of at least 4");
    const double tau = p.r_load() * p.c_o();
    const auto settle_periods =
        static_cast<std::size_t>(std::ceil(opt.settle_time_constants * tau * f_hz));
    const std::size_t settle = settle_periods * per_period;
    const std::size_t measure = static_cast<std::size_t>(opt.measure_periods) * per_period;

    const double T = p.t_period;
    const double amp = opt.relative_amplitude * op.duty;
    const ModulationCommand base = make_command(op.duty, op.phase_delay_norm * T, p);
    SwitchedSimulator sim(p, periodic_state(p, base));
    const double w = numeric::two_pi * f_hz;
    cplx acc(0.0, 0.0);
    for (std::size_t k = 0; k < settle + measure; ++k) {
        const double t_mid = (static_cast<double>(k) + 0.5) * T;
        const ModulationCommand cmd =
            make_command(op.duty + amp * std::sin(w * t_mid), base.t_f, p);
        const CycleResult r = sim.step(cmd);
        if (k >= settle) acc += r.diag.v_o_mean * std::exp(cplx(0.0, -w * t_mid));
    }
    const cplx v1 = acc * (2.0 / static_cast<double>(measure));
    return v1 / cplx(0.0, -amp);
}

inline std::vector<BodePoint> switched_bode_spot(const ValidatedParams& p, const OperatingPoint& op,
                                                 const std::vector<double>& f_grid,
                                                 const SwitchedPerturbationOptions& opt = {}) {
    std::vector<cplx> resp(f_grid.size());
    parallel_for(f_grid.size(), [&](std::size_t i) {
        resp[i] = switched_perturbation_response(p, op, f_grid[i], opt);
    });
    std::size_t idx = 0;
    return detail::bode_of([&](double) { return resp[idx++]; }, f_grid,
                           detail::gain_sine(op) < 0.0 ? -180.0 : 0.0);
}

}  // namespace wpr
