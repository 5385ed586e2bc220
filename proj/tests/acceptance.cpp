// Acceptance report: one PASS/FAIL line per criterion with the measured
// values. Exit status is 0 when every criterion could be evaluated; with
// --strict it is the number of failing criteria instead.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wpr/wpr.hpp"

using namespace wpr;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const ValidatedParams& proto() {
    static const ValidatedParams p = validate(table2_params());
    return p;
}

const ValidatedParams& small_signal_params() {
    static const ValidatedParams p = validate(fig7_params());
    return p;
}

OperatingPoint fig7_point() { return pinned_operating_point(small_signal_params(), 0.5, 0.1); }

constexpr double report_duty = 0.532;
constexpr double report_pd = 0.0672;

/// Every named scenario, run once and shared between criteria 9 and 10.
const std::map<std::string, TransientRecord>& scenario_records() {
    static const auto recs = [] {
        const auto names = scenario_names();
        std::vector<TransientRecord> out(names.size());
        parallel_for(names.size(), [&](std::size_t k) { out[k] = run_scenario(names[k], proto()); });
        std::map<std::string, TransientRecord> m;
        for (std::size_t k = 0; k < names.size(); ++k) m.emplace(names[k], std::move(out[k]));
        return m;
    }();
    return recs;
}

Outcome criterion1() {
    const auto& p = proto();
    const double a = fall_time_approx(p, 24.0) * 1e9;
    const double e = fall_time_exact(p, 24.0) * 1e9;
    const double gap = std::abs(e - a) / e;
    return {std::abs(a - 382.0) <= 1.0 && e >= 384.0 && e <= 388.0 && gap <= 0.02,
            fmt("t_f approx %.2f ns, exact %.2f ns, gap %.2f %%", a, e, 100 * gap)};
}

double criterion2_value() { return steady_state_vo(2.35, 38.09, report_duty, report_pd); }

Outcome criterion2() {
    const double v = criterion2_value();
    return {std::abs(v - 24.56) <= 0.15, fmt("v_o %.4f V", v)};
}

Outcome criterion3() {
    const auto& p = proto();
    const double target = criterion2_value();
    const auto cmd = make_command(report_duty, report_pd / p.f_s(), p);
    const std::size_t cycles = static_cast<std::size_t>(std::llround(0.1 * p.f_s()));
    const auto res = run(p, cmd, cycles, SwitchCycleState::at_rest(target), {}, false);
    const auto& last = res.cycles.back();
    const double bound = ripple_estimate(p.i_ls_amp(), p.f_s(), p.c_o());
    const double mean_err = std::abs(last.v_o_mean - target) / target;
    const double ripple_err = std::abs(last.v_o_ripple_pp - bound) / bound;
    std::size_t hard = 0;
    for (const auto& d : res.cycles) hard += d.hard_switched;
    return {mean_err <= 0.01 && ripple_err <= 0.10,
            fmt("after %zu cycles: mean %.4f V vs %.4f V (%.2f %%), ripple %.3f mV vs %.3f mV "
                "(%.1f %%), hard-switched cycles %zu",
                cycles, last.v_o_mean, target, 100 * mean_err, 1e3 * last.v_o_ripple_pp,
                1e3 * bound, 100 * ripple_err, hard)};
}

Outcome criterion4() {
    const auto g = design_pi(small_signal_params(), fig7_point(), 1000.0);
    return {std::abs(g.k_p + 1.07) <= 0.01 && std::abs(g.k_i + 356.0) <= 3.0,
            fmt("k_p %.4f, k_i %.2f 1/s", g.k_p, g.k_i)};
}

Outcome criterion5() {
    const auto op = fig7_point();
    const auto tf = plant_tf(small_signal_params(), op);
    const auto m = loop_margins(tf, design_pi(small_signal_params(), op, 1000.0));
    // the PI design puts the 10 Hz gain at 40 dB to rounding; allow the last ulps
    const bool ok = std::abs(m.crossover_hz - 1000.0) <= 10.0 &&
                    std::abs(m.phase_margin_deg - 90.0) <= 1.0 && m.gain_at_10hz_db >= 40.0 - 1e-9;
    return {ok, fmt("crossover %.3f Hz, phase margin %.3f deg, gain at 10 Hz %.6f dB",
                    m.crossover_hz, m.phase_margin_deg, m.gain_at_10hz_db)};
}

Outcome criterion6() {
    const auto grid = log_grid(10.0, 10e3, 30);
    const auto op = fig7_point();
    const auto a = bode(plant_tf(small_signal_params(), op), grid);
    const auto o = perturb_bode_oracle(small_signal_params(), op, grid);
    double dmag = 0.0, dph = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dmag = std::max(dmag, std::abs(a[i].mag_db - o[i].mag_db));
        dph = std::max(dph, std::abs(a[i].phase_deg - o[i].phase_deg));
    }
    return {dmag <= 0.5 && dph <= 3.0,
            fmt("%zu points, worst |dmag| %.4f dB, worst |dphase| %.4f deg", grid.size(), dmag, dph)};
}

Outcome criterion7() {
    const auto& p = proto();
    const auto cmd = make_command(report_duty, report_pd / p.f_s(), p);
    const auto r = steady_capture(p, cmd, 16, 400);
    const auto s = spectrum(r.waveform, "v_cd1", spectrum_harmonics);
    const double fund = s.harmonics.front().amplitude;
    const double thd = 100.0 * s.thd;
    return {std::abs(fund - 15.0) <= 0.75 && std::abs(thd - 46.0) <= 5.0,
            fmt("fundamental %.3f V, THD %.2f %%", fund, thd)};
}

Outcome criterion8() {
    const auto pts = coupling_sweep(proto(), coupling_sweep_currents());
    double worst = 0.0, zvs = 1.0, zcs = 1.0;
    for (const auto& pt : pts) {
        worst = std::max(worst, std::abs(pt.metrics.final_value - 24.0));
        zvs = std::min(zvs, pt.metrics.zvs_fraction);
        zcs = std::min(zcs, pt.metrics.zcs_fraction);
    }
    return {worst <= 0.1 && zvs == 1.0 && zcs == 1.0,
            fmt("%zu currents in [%.2f, %.2f] A: max |v_o - 24| %.2f mV, min ZVS %.3f, min ZCS %.3f",
                pts.size(), coupling_sweep_i_min, coupling_sweep_i_max, 1e3 * worst, zvs, zcs)};
}

Outcome criterion9() {
    const auto& p = proto();
    // (a) energy audit, including hard-switched and cold-start cycles
    double worst_energy = 0.0;
    for (double t_on : {0.0, 336e-9, 1.03 * feedforward_tf(24.0, 2.35, p)}) {
        const auto res = run(p, make_command(0.56, t_on, p), 200, SwitchCycleState::at_rest(0.0), {},
                             false);
        for (const auto& d : res.cycles) worst_energy = std::max(worst_energy, std::abs(d.energy_residual));
    }
    const bool a = worst_energy <= 1e-9;

    const auto& recs = scenario_records();
    const auto& step = recs.at("load_step_up").metrics;
    const bool b = step.settling_time && step.steady_state_error < 1e-3 && !step.sustained_oscillation;

    const auto& start = recs.at("startup").metrics;
    const bool c = start.overshoot < 0.01;

    double ramp_dev = 0.0;
    for (const char* n : {"current_ramp_up", "current_ramp_down"})
        for (const auto& row : recs.at(n).rows)
            ramp_dev = std::max(ramp_dev, std::abs(row.v_o_mean - row.v_ref) / row.v_ref);
    const bool d = ramp_dev < 0.02;

    return {a && b && c && d,
            fmt("(a) worst energy residual %.2e %s; (b) load step settles in %.2f ms, sse %.2e %s; "
                "(c) start-up overshoot %.3f %% %s; (d) ramp deviation %.3f %% %s",
                worst_energy, a ? "ok" : "FAIL", 1e3 * step.settling_time.value_or(-1.0),
                step.steady_state_error, b ? "ok" : "FAIL", 100 * start.overshoot, c ? "ok" : "FAIL",
                100 * ramp_dev, d ? "ok" : "FAIL")};
}

// -- criterion 10 sub-checks ------------------------------------------------

std::vector<double> interior_duties(double pd, int n) {
    const auto b = duty_bounds(pd);
    std::vector<double> d;
    for (int i = 0; i <= n; ++i) d.push_back(b.d_min + 0.02 + (b.d_max - 0.04 - b.d_min) * i / n);
    return d;
}

Outcome state_sequence() {
    const auto& p = proto();
    const double t_on = 1.03 * feedforward_tf(28.0, 2.35, p);
    const std::vector<SwitchingState> legal{SwitchingState::I, SwitchingState::II, SwitchingState::III,
                                            SwitchingState::IV, SwitchingState::V};
    std::size_t n = 0, bad = 0;
    for (double d : interior_duties(p.f_s() * t_on, 20)) {
        const auto cmd = make_command(d, t_on, p);
        for (const auto& diag : run(p, cmd, 5, periodic_state(p, cmd), {}, false).cycles) {
            ++n;
            bad += diag.states != legal;
        }
    }
    return {bad == 0, fmt("%zu/%zu cycles follow I-II-III-IV-V", n - bad, n)};
}

Outcome charge_balance() {
    const auto& p = proto();
    const double w = p.omega;
    double worst_closed = 0.0;
    for (double v : {5.0, 12.0, 24.0, 30.0}) {
        for (double d : {0.5, 0.6, 0.7}) {
            const double t_f = fall_time_exact(p, v);
            const double pd = p.f_s() * t_f;
            const double t0 = (d + pd) / p.f_s();
            const double t_r = rise_time(d, pd, p.f_s(), p.c_sum, v, 2.35);
            auto i = [&](double t) { return 2.35 * std::sin(w * t); };
            const double q_f = oracle::simpson(i, 0.0, t_f, 4000);
            const double q_r = -oracle::simpson(i, t0, t0 + t_r, 4000);
            worst_closed = std::max(worst_closed, std::abs(q_f - q_r) / q_f);
        }
    }
    // switched circuit: the integrated source charge equals the capacitor swing
    double worst_sim = 0.0;
    const double t_on = 1.03 * feedforward_tf(28.0, 2.35, p);
    for (double d : interior_duties(p.f_s() * t_on, 10)) {
        const auto cmd = make_command(d, t_on, p);
        const auto g = step_cycle(periodic_state(p, cmd), cmd, p).diag;
        const double qf = p.c_s1() * g.v_o_fall_start + p.c_d1() * g.v_o_fall_end;
        const double qr = p.c_d1() * g.v_o_rise_start + p.c_s1() * g.v_o_rise_end;
        worst_sim = std::max({worst_sim, std::abs(g.q_f - qf) / qf, std::abs(g.q_r - qr) / qr});
    }
    return {worst_closed <= 1e-9 && worst_sim <= 1e-9,
            fmt("closed-form |Q_f - Q_r|/Q_f %.2e, switched charge audit %.2e", worst_closed,
                worst_sim)};
}

Outcome device_stress() {
    const auto& p = proto();
    std::size_t n = 0, bad = 0;
    double worst = -INFINITY, worst_vs_mean = -INFINITY;
    for (double t_on : {1.03 * feedforward_tf(28.0, 2.35, p), 500e-9}) {
        for (double d : interior_duties(p.f_s() * t_on, 10)) {
            const auto cmd = make_command(d, t_on, p);
            for (const auto& g : run(p, cmd, 3, periodic_state(p, cmd), {}, false).cycles) {
                const double limit = 0.5 * (g.v_o_min + g.v_o_max) + 0.5 * g.v_o_ripple_pp;
                const double excess = std::max(g.v_cs1_max, g.v_cd1_max) - limit;
                worst = std::max(worst, excess);
                worst_vs_mean = std::max(worst_vs_mean, std::max(g.v_cs1_max, g.v_cd1_max) -
                                                            g.v_o_mean - 0.5 * g.v_o_ripple_pp);
                ++n;
                bad += excess > 1e-9 * g.v_o_max;
            }
        }
    }
    return {bad == 0, fmt("%zu cycles, worst (v_stress - v_o - ripple/2) %.3e V with v_o at the "
                          "ripple-band centre (%.3e V against the cycle mean)",
                          n, worst, worst_vs_mean)};
}

Outcome rise_time_parity() {
    const auto& p = proto();
    double worst = 0.0;
    for (double v : {12.0, 24.0, 30.0}) {
        const double pd = p.f_s() * fall_time_approx(p, v);
        for (double d : interior_duties(pd, 6)) {
            const double tr = rise_time(d, pd, p.f_s(), p.c_sum, v, 2.35);
            const double w = p.omega, t0 = (d + pd) / p.f_s();
            auto q = [&](double t) {
                return oracle::rk4([&](double s, double) { return -2.35 * std::sin(w * s); }, t0, 0.0,
                                   t, 400);
            };
            const auto root = oracle::first_root([&](double t) { return q(t) - p.c_sum * v; }, t0,
                                                 p.t_period);
            if (!root) return {false, "charge-balance oracle found no rise"};
            worst = std::max(worst, std::abs(tr - (*root - t0)));
        }
    }
    return {worst <= 1e-10, fmt("worst |t_r - oracle| %.2e s", worst)};
}

Outcome argmax_check() {
    double worst = 0.0;
    for (double pd : {0.0, 0.02, 0.0672, 0.1, 0.2}) {
        const double d = oracle::argmax([&](double x) { return steady_state_vo(2.35, 38.09, x, pd); },
                                        0.05, 0.95);
        worst = std::max(worst, std::abs(d - (0.5 - pd)));
    }
    return {worst <= 1e-6, fmt("worst |argmax - (0.5 - f_s t_f)| %.2e", worst)};
}

Outcome gain_parity() {
    const auto& p = small_signal_params();
    double worst = 0.0;
    for (double d : {0.42, 0.5, 0.6, 0.7}) {
        for (double pd : {0.05, 0.1}) {
            const double fd = oracle::central_diff([&](double x) { return averaged_rhs(5.0, x, pd, p); },
                                                   d, 1e-6);
            const auto tf = plant_tf(p, pinned_operating_point(p, d, pd));
            const double model = tf.dc_gain / (p.r_load() * p.c_o());
            worst = std::max(worst, std::abs(fd - model) / std::abs(model));
        }
    }
    return {worst <= 1e-6, fmt("worst relative gap %.2e", worst)};
}

Outcome duty_admissibility() {
    std::size_t rows = 0, violations = 0;
    for (const auto& [name, rec] : scenario_records()) {
        const auto b = duty_bounds(proto().f_s() * rec.t_f_cmd);
        for (const auto& r : rec.rows) {
            ++rows;
            violations += r.duty < b.d_min || r.duty > b.d_max;
        }
        violations += rec.metrics.duty_violations;
    }
    return {violations == 0, fmt("%zu scenarios, %zu cycles, %zu out-of-range duties",
                                 scenario_records().size(), rows, violations)};
}

Outcome pole_zero_margin() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int n = 0;
    double worst = 0.0;
    while (n < 2000) {
        const ValidatedParams p = with_conditions(small_signal_params(), 5 + 100 * u(rng), 0.3 + 3 * u(rng));
        const double pd = 0.2 * u(rng);
        const auto b = duty_bounds(pd);
        const double d = b.d_min + (b.d_max - b.d_min) * u(rng);
        if (std::abs(std::sin(oracle::two_pi * (d + pd))) < 1e-3) continue;
        ++n;
        const auto op = pinned_operating_point(p, d, pd);
        const auto m = loop_margins(plant_tf(p, op), design_pi(p, op, 100 + 5000 * u(rng)));
        worst = std::max(worst, std::abs(m.phase_margin_deg - 90.0));
    }
    return {worst <= 1e-6, fmt("%d random design points, worst |PM - 90| %.2e deg", n, worst)};
}

Outcome criterion10() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> subs{
        {"state sequence", state_sequence},     {"charge balance", charge_balance},
        {"device stress", device_stress},       {"rise-time parity", rise_time_parity},
        {"argmax", argmax_check},               {"gain parity", gain_parity},
        {"duty admissibility", duty_admissibility}, {"pole-zero margin", pole_zero_margin}};
    Outcome all{true, ""};
    for (const auto& [name, fn] : subs) {
        const Outcome o = fn();
        std::printf("    [%s] %s: %s\n", o.pass ? "ok" : "FAIL", name, o.detail.c_str());
        all.pass = all.pass && o.pass;
    }
    all.detail = fmt("%zu invariant suites", subs.size());
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    bool strict = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--strict") == 0) {
            strict = true;
        } else {
            std::fprintf(stderr, "usage: %s [--strict]\n", argv[0]);
            return 2;
        }
    }
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
        {"commutation time", criterion1},       {"steady-state output", criterion2},
        {"switched/averaged parity", criterion3}, {"PI gains", criterion4},
        {"loop shaping", criterion5},           {"Bode parity", criterion6},
        {"harmonics", criterion7},              {"coupling sweep", criterion8},
        {"lossless and transient substitutes", criterion9}, {"invariant suites", criterion10}};
    int failed = 0, errors = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto& [name, fn] = criteria[k];
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            ++errors;
            o = {false, std::string("not evaluated: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, name,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    if (errors) return 100 + errors;
    return strict ? failed : 0;
}
