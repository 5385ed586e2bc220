// Prototype operating point three ways: closed form, averaged model and the
// exact switched circuit.

#include <cstdio>

#include "wpr/wpr.hpp"

int main() {
    const wpr::ValidatedParams p = wpr::validate(wpr::table2_params());
    const double duty = 0.532;
    const double v_ref = 24.0;

    const double t_f = wpr::fall_time_approx(p, v_ref);
    std::printf("fall time at %.0f V: %.1f ns (approx), %.1f ns (exact)\n", v_ref, t_f * 1e9,
                wpr::fall_time_exact(p, v_ref) * 1e9);

    const wpr::OperatingPoint op = wpr::solve_operating_point(p, duty);
    std::printf("self-consistent point at D = %.3f: v_o = %.3f V, f_s t_f = %.4f\n", duty, op.v_o,
                op.phase_delay_norm);

    // Gate delay stretched a little past the estimate so S1 still turns on at zero volts.
    const wpr::ModulationCommand cmd = wpr::make_command(duty, 1.03 * op.t_f, p);
    wpr::SimOptions opt;
    opt.samples_per_cycle = 200;
    const auto run = wpr::run(p, cmd, 4, wpr::periodic_state(p, cmd, opt), opt);
    const auto& d = run.cycles.back();
    std::printf("switched circuit: v_o = %.3f V, ripple %.2f mV, zvs %s, zcs %s\n", d.v_o_mean,
                d.v_o_ripple_pp * 1e3, d.zvs_ok ? "yes" : "no", d.zcs_ok ? "yes" : "no");

    const auto s = wpr::spectrum(wpr::run(p, cmd, 16, run.final_state, opt).waveform, "v_cd1", 20);
    std::printf("v_cd1 fundamental %.2f V, THD %.1f %%\n", s.harmonics.front().amplitude,
                100.0 * s.thd);
}
