#pragma once

// Cycle-by-cycle output regulation: PI with conditional-integration
// anti-windup, a fixed-reference fall-time feedforward for the gate delay,
// and the transient scenarios used to exercise the loop.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wpr/analytic.hpp"
#include "wpr/errors.hpp"
#include "wpr/modulation.hpp"
#include "wpr/receiver.hpp"
#include "wpr/simulator.hpp"
#include "wpr/small_signal.hpp"

namespace wpr {

struct ControllerState {
    double integrator = 0.5;
    double last_duty = 0.5;
    bool saturated = false;

    static ControllerState at(double duty) { return {duty, duty, false}; }
};

/// One controller update per carrier cycle. The integrator only moves when
/// the output is unsaturated or when the error pulls it back inside.
inline std::pair<double, ControllerState> pi_update(double v_o_sample, double v_ref,
                                                    const PiGains& g, ControllerState s,
                                                    double t_step) {
    const double e = v_ref - v_o_sample;
    const double trial = s.integrator + g.k_i * e * t_step;
    double raw = g.k_p * e + trial;
    if (raw > g.d_max || raw < g.d_min) {
        const bool outward = (raw > g.d_max && g.k_i * e > 0.0) || (raw < g.d_min && g.k_i * e < 0.0);
        if (!outward) {
            s.integrator = trial;
        } else {
            raw = g.k_p * e + s.integrator;
        }
    } else {
        s.integrator = trial;
    }
    s.saturated = raw > g.d_max || raw < g.d_min;
    s.last_duty = std::clamp(raw, g.d_min, g.d_max);
    return {s.last_duty, s};
}

/// Gate delay from the small-angle fall time evaluated at a fixed reference
/// voltage and nominal current instead of the live values.
inline double feedforward_tf(double v_ref, double i_ls_nominal, const ValidatedParams& p) {
    detail::require_non_negative(v_ref, "v_ref");
    detail::require_positive(i_ls_nominal, "i_ls_nominal");
    return fall_time_approx(p.c_sum, v_ref, p.f_s(), i_ls_nominal);
}

// ---------------------------------------------------------------------------
// Scenarios

/// Piecewise-linear profile through (t, value) knots, held flat outside.
class Profile {
public:
    Profile() = default;
    explicit Profile(double v) : knots_{{0.0, v}} {}
    explicit Profile(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
        if (knots_.empty()) throw NonPositiveParameter("profile needs at least one knot");
        for (std::size_t i = 1; i < knots_.size(); ++i)
            if (knots_[i].first < knots_[i - 1].first)
                throw NonPositiveParameter("profile knots must be time-ordered");
    }

    static Profile step(double t, double before, double after) {
        return Profile({{t, before}, {t, after}});
    }
    static Profile ramp(double t0, double t1, double from, double to) {
        return Profile({{t0, from}, {t1, to}});
    }

    double at(double t) const {
        if (t < knots_.front().first) return knots_.front().second;
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            const auto& [ta, va] = knots_[i - 1];
            const auto& [tb, vb] = knots_[i];
            if (t < tb) return tb == ta ? vb : va + (vb - va) * (t - ta) / (tb - ta);
        }
        return knots_.back().second;
    }

    double final_value() const { return knots_.back().second; }

private:
    std::vector<std::pair<double, double>> knots_{{0.0, 0.0}};
};

struct Scenario {
    std::string name;
    double duration = 0.1;
    Profile r_load;
    Profile i_ls_amp;
    Profile v_ref{24.0};
    double sync_enable_time = 0.0;
    double event_time = 0.0;  ///< disturbance instant used by the settling metrics

    double v_o_initial = 0.0;
    double i_ff = 2.35;       ///< current used by the gate-delay feedforward
    double ff_margin = 1.03;  ///< stretch of the feedforward delay that keeps ZVS
    double v_ff = 24.0;       ///< voltage used by the gate-delay feedforward
    double design_r_load = 0.0;
    double design_i_ls = 0.0;
    double f_c = 1000.0;  ///< loop crossover for the PI design [Hz]
    double sync_delay = 0.0;  ///< zero-crossing comparator delay added to every gate edge [s]
};

/// Gate delay commanded throughout a scenario.
inline double scenario_tf(const Scenario& sc, const ValidatedParams& p) {
    return sc.ff_margin * feedforward_tf(sc.v_ff, sc.i_ff, p);
}

/// PI gains for a scenario at its design load and current.
inline PiGains scenario_gains(const Scenario& sc, const ValidatedParams& base) {
    const double r = sc.design_r_load > 0.0 ? sc.design_r_load : sc.r_load.at(sc.event_time);
    const double i = sc.design_i_ls > 0.0 ? sc.design_i_ls : sc.i_ls_amp.at(sc.event_time);
    const ValidatedParams p = with_conditions(base, r, i);
    const double pd = p.f_s() * scenario_tf(sc, p);
    const double d = duty_for_voltage(i, r, sc.v_ref.at(sc.event_time), pd);
    return design_pi(p, pinned_operating_point(p, d, pd), sc.f_c);
}

struct TransientRow {
    double t = 0.0;
    double v_o_sample = 0.0;
    double v_o_mean = 0.0;
    double duty = 0.0;
    double r_load = 0.0;
    double i_ls_amp = 0.0;
    double v_ref = 0.0;
    bool gate_enabled = false;
    bool zvs_ok = true;
    bool zcs_ok = true;
    bool hard_switched = false;
};

struct TransientMetrics {
    double final_value = 0.0;
    std::optional<double> settling_time;  ///< from event_time into the +-1 % band
    double overshoot = 0.0;               ///< fraction of final value
    double undershoot = 0.0;
    double steady_state_error = 0.0;  ///< |final - v_ref| / v_ref
    double tail_peak_to_peak = 0.0;
    bool sustained_oscillation = false;
    std::size_t duty_violations = 0;
    double zvs_fraction = 0.0;
    double zcs_fraction = 0.0;
    bool regulation_failed = false;
};

struct TransientRecord {
    std::string scenario;
    PiGains gains;
    double t_f_cmd = 0.0;
    std::vector<TransientRow> rows;
    std::vector<CycleDiagnostics> diagnostics;
    std::vector<Event> events;
    TransientMetrics metrics;
};

namespace detail {

inline TransientMetrics transient_metrics(const TransientRecord& rec, const Scenario& sc,
                                          const ValidatedParams& p) {
    TransientMetrics m;
    const auto& rows = rec.rows;
    const std::size_t n = rows.size();
    // final value: mean over the last 2 ms of the record or 20 cycles, whichever is longer
    const std::size_t tail =
        std::min(n, std::max<std::size_t>(20, static_cast<std::size_t>(2e-3 / p.t_period)));
    double acc = 0.0, lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = n - tail; k < n; ++k) {
        acc += rows[k].v_o_mean;
        lo = std::min(lo, rows[k].v_o_mean);
        hi = std::max(hi, rows[k].v_o_mean);
    }
    m.final_value = acc / static_cast<double>(tail);
    m.tail_peak_to_peak = hi - lo;
    const double ref = sc.v_ref.final_value();
    m.steady_state_error = std::abs(m.final_value - ref) / ref;
    m.sustained_oscillation = m.tail_peak_to_peak > 5e-3 * ref;

    std::optional<double> last_outside;
    double peak = -INFINITY, dip = INFINITY;
    std::size_t zvs = 0, zcs = 0;
    for (const auto& r : rows) {
        zvs += r.zvs_ok ? 1 : 0;
        zcs += r.zcs_ok ? 1 : 0;
        if (r.duty < rec.gains.d_min - 1e-15 || r.duty > rec.gains.d_max + 1e-15) ++m.duty_violations;
        if (r.t < sc.event_time) continue;
        peak = std::max(peak, r.v_o_mean);
        dip = std::min(dip, r.v_o_mean);
        if (std::abs(r.v_o_mean - m.final_value) > 0.01 * m.final_value) last_outside = r.t;
    }
    m.zvs_fraction = n ? static_cast<double>(zvs) / static_cast<double>(n) : 0.0;
    m.zcs_fraction = n ? static_cast<double>(zcs) / static_cast<double>(n) : 0.0;
    if (m.final_value > 0.0 && std::isfinite(peak)) {
        m.overshoot = std::max(0.0, (peak - m.final_value) / m.final_value);
        m.undershoot = std::max(0.0, (m.final_value - dip) / m.final_value);
    }
    if (!last_outside) {
        m.settling_time = 0.0;
    } else if (*last_outside < rows.back().t) {
        m.settling_time = *last_outside + p.t_period - sc.event_time;
    }
    m.regulation_failed = !m.settling_time || m.steady_state_error > 1e-3 || m.sustained_oscillation;
    return m;
}

}  // namespace detail

struct ClosedLoopOptions {
    SimOptions sim;
    bool keep_events = false;
};

/// Drives the switched simulator one cycle at a time: sample v_o at the cycle
/// start, update the PI, time the gate from the sync edge, step the circuit.
inline TransientRecord closed_loop_run(const Scenario& sc, const PiGains& gains,
                                       const ValidatedParams& base,
                                       const ClosedLoopOptions& opt = {}) {
    const double T = base.t_period;
    const auto n_cycles = static_cast<std::size_t>(std::llround(sc.duration / T));
    if (n_cycles < 100) throw NonPositiveParameter("scenario shorter than 100 cycles");

    TransientRecord rec;
    rec.scenario = sc.name;
    rec.t_f_cmd = scenario_tf(sc, base);
    const DutyBounds b = duty_bounds(base.f_s() * rec.t_f_cmd);
    rec.gains = gains;
    rec.gains.d_min = std::max(gains.d_min, b.d_min);
    rec.gains.d_max = std::min(gains.d_max, b.d_max);
    if (rec.gains.d_min > rec.gains.d_max) throw EmptyDutyRange("controller duty range is empty");

    SwitchedSimulator sim(base, SwitchCycleState::at_rest(sc.v_o_initial), opt.sim);
    auto clamp_duty = [&](double d) { return std::clamp(d, rec.gains.d_min, rec.gains.d_max); };
    ControllerState cs = ControllerState::at(clamp_duty(0.5 * (rec.gains.d_min + rec.gains.d_max)));
    // start the integrator at the duty that holds the initial reference
    try {
        const double r0 = sc.r_load.at(0.0), i0 = sc.i_ls_amp.at(0.0);
        if (i0 > 0.0)
            cs = ControllerState::at(clamp_duty(
                duty_for_voltage(i0, r0, sc.v_ref.at(0.0), base.f_s() * rec.t_f_cmd)));
    } catch (const NumericalError&) {
    }

    rec.rows.reserve(n_cycles);
    rec.diagnostics.reserve(n_cycles);
    for (std::size_t k = 0; k < n_cycles; ++k) {
        const double t = sim.time();
        TransientRow row;
        row.t = t;
        row.r_load = sc.r_load.at(t);
        row.i_ls_amp = sc.i_ls_amp.at(t);
        row.v_ref = sc.v_ref.at(t);
        sim.set_params(with_conditions(base, row.r_load, row.i_ls_amp));
        row.v_o_sample = sim.state().v_o;
        row.gate_enabled = t >= sc.sync_enable_time;
        if (row.gate_enabled) {
            const auto [duty, next] = pi_update(row.v_o_sample, row.v_ref, rec.gains, cs, T);
            cs = next;
        }
        row.duty = cs.last_duty;
        ModulationCommand cmd = make_command(row.duty, rec.t_f_cmd + sc.sync_delay, sim.params());
        cmd.gate_enabled = row.gate_enabled;
        CycleResult r = sim.step(cmd);
        row.v_o_mean = r.diag.v_o_mean;
        row.zvs_ok = r.diag.zvs_ok;
        row.zcs_ok = r.diag.zcs_ok;
        row.hard_switched = r.diag.hard_switched;
        rec.rows.push_back(row);
        if (opt.keep_events)
            rec.events.insert(rec.events.end(), r.waveform.events.begin(), r.waveform.events.end());
        rec.diagnostics.push_back(std::move(r.diag));
    }
    rec.metrics = detail::transient_metrics(rec, sc, base);
    return rec;
}

// ---------------------------------------------------------------------------
// Named scenarios on the prototype receiver

inline constexpr double no_load_ohm = 10e3;

/// 10 W at 24 V.
inline constexpr double coupling_sweep_ohm = 57.6;
inline constexpr double coupling_sweep_i_min = 1.45;
inline constexpr double coupling_sweep_i_max = 2.6;

inline std::vector<std::string> scenario_names() {
    return {"startup",           "load_step_up", "load_step_down", "current_ramp_up",
            "current_ramp_down", "ref_step",     "coupling_sweep"};
}

/// Constant coil current at the 10 W load. The delay feedforward uses the
/// weakest coupling so that stronger coupling only finishes State I earlier;
/// the gains are designed once at 2 A, where the plant gain is well away
/// from zero.
inline Scenario coupling_point(double i_ls_amp, double duration = 0.04) {
    Scenario sc;
    sc.name = "coupling_point";
    sc.duration = duration;
    sc.r_load = Profile(coupling_sweep_ohm);
    sc.i_ls_amp = Profile(i_ls_amp);
    sc.v_o_initial = 24.0;
    sc.i_ff = coupling_sweep_i_min;
    sc.design_r_load = coupling_sweep_ohm;
    sc.design_i_ls = 2.0;
    return sc;
}

inline Scenario make_scenario(const std::string& name) {
    Scenario sc;
    sc.name = name;
    sc.i_ls_amp = Profile(2.35);
    sc.r_load = Profile(36.0);
    sc.v_o_initial = 24.0;
    if (name == "startup") {
        sc.duration = 0.3;
        sc.v_o_initial = 0.0;
        sc.event_time = 0.0;
        sc.design_r_load = 36.0;
    } else if (name == "load_step_up" || name == "load_step_down") {
        const bool up = name == "load_step_up";  // up = more output power
        sc.duration = 0.1;
        sc.event_time = 0.02;
        sc.r_load = Profile::step(sc.event_time, up ? no_load_ohm : 36.0, up ? 36.0 : no_load_ohm);
        sc.design_r_load = 36.0;
    } else if (name == "current_ramp_up" || name == "current_ramp_down") {
        const bool up = name == "current_ramp_up";
        sc.duration = 0.08;
        sc.event_time = 0.02;
        sc.r_load = Profile(240.0);
        sc.i_ls_amp = Profile::ramp(sc.event_time, sc.event_time + 0.01, up ? 1.0 : 1.85,
                                    up ? 1.85 : 1.0);
        sc.i_ff = 1.0;
        sc.ff_margin = 1.04;  // the small-angle estimate is ~2 % short at 1 A
        sc.design_i_ls = 1.0;
    } else if (name == "ref_step") {
        sc.duration = 0.08;
        sc.event_time = 0.02;
        sc.v_ref = Profile::step(sc.event_time, 24.0, 20.0);
        sc.v_ff = 24.0;
        sc.design_r_load = 36.0;
    } else if (name == "coupling_sweep") {
        sc = coupling_point(coupling_sweep_i_min, 0.25);
        sc.name = name;
        sc.event_time = 0.02;
        sc.i_ls_amp = Profile::ramp(sc.event_time, 0.2, coupling_sweep_i_min, coupling_sweep_i_max);
    } else {
        throw UnknownScenario(name);
    }
    return sc;
}

}  // namespace wpr
