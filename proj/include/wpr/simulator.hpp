#pragma once

// Event-driven switched model of the rectifier over one carrier period at a
// time. The circuit is linear in each of three topologies, so every segment
// has a closed form:
//
//   switch on   node tied to the output, C_o + C_D1 charged by i - v_o/R
//   diode on    node clamped at -V_f, C_o + C_S1 discharging into R
//   both off    node floating; with u = v_node - v_o the pair (v_o, u) obeys
//               v_o' = -alpha v_o + beta i(t) and
//               C_sum u = C_sum u0 + q(t0, t) - C_D1 (v_o - v_o0)
//
// Each affine piece y' = -a y + b sin(w t) is solved by
//   y(t) = (y0 - b P(t0)) e^{-a (t - t0)} + b P(t),
//   P(t) = (a sin w t - w cos w t) / (a^2 + w^2).
// Commutation instants inside the floating topology are bracketed on a grid
// and bisected to the last representable time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wpr/analytic.hpp"
#include "wpr/errors.hpp"
#include "wpr/modulation.hpp"
#include "wpr/numeric.hpp"
#include "wpr/receiver.hpp"

namespace wpr {

/// Five intervals of the carrier cycle.
enum class SwitchingState : int {
    I = 1,    ///< both devices off, C_S1 discharging
    II = 2,   ///< switch conducting, positive half-cycle
    III = 3,  ///< switch conducting, negative half-cycle
    IV = 4,   ///< both devices off, C_S1 charging
    V = 5,    ///< diode conducting
};

inline const char* to_string(SwitchingState s) {
    switch (s) {
        case SwitchingState::I: return "I";
        case SwitchingState::II: return "II";
        case SwitchingState::III: return "III";
        case SwitchingState::IV: return "IV";
        case SwitchingState::V: return "V";
    }
    return "?";
}

struct SwitchCycleState {
    double v_cs1 = 0.0;
    double v_cd1 = 0.0;
    double v_o = 0.0;
    double phase = 0.0;  ///< time into the current cycle [s]
    SwitchingState active = SwitchingState::V;

    /// Output charged to v_o with the diode conducting, as at the end of a
    /// regular cycle.
    static SwitchCycleState at_rest(double v_o) {
        SwitchCycleState s;
        s.v_o = v_o;
        s.v_cs1 = v_o;
        return s;
    }
};

enum class EventKind { cycle_start, gate_on, hard_switch, cs1_zero, ils_zero, gate_off, cd1_zero };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::cycle_start: return "cycle_start";
        case EventKind::gate_on: return "gate_on";
        case EventKind::hard_switch: return "hard_switch";
        case EventKind::cs1_zero: return "cs1_zero";
        case EventKind::ils_zero: return "ils_zero";
        case EventKind::gate_off: return "gate_off";
        case EventKind::cd1_zero: return "cd1_zero";
    }
    return "?";
}

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::cycle_start;
};

/// Uniformly sampled channels plus the exact event log. gate and state are
/// stored as 0/1 and 1..5.
struct Waveform {
    double period = 0.0;
    std::size_t samples_per_period = 0;
    std::vector<double> t, i_ls, v_cs1, v_cd1, v_o, gate, state;
    std::vector<Event> events;

    std::size_t size() const noexcept { return t.size(); }

    void append(const Waveform& w) {
        if (period == 0.0) {
            period = w.period;
            samples_per_period = w.samples_per_period;
        }
        auto cat = [](std::vector<double>& a, const std::vector<double>& b) {
            a.insert(a.end(), b.begin(), b.end());
        };
        cat(t, w.t);
        cat(i_ls, w.i_ls);
        cat(v_cs1, w.v_cs1);
        cat(v_cd1, w.v_cd1);
        cat(v_o, w.v_o);
        cat(gate, w.gate);
        cat(state, w.state);
        events.insert(events.end(), w.events.begin(), w.events.end());
    }

    const std::vector<double>& channel(std::string_view name) const {
        if (name == "i_ls") return i_ls;
        if (name == "v_cs1") return v_cs1;
        if (name == "v_cd1") return v_cd1;
        if (name == "v_o") return v_o;
        if (name == "gate") return gate;
        if (name == "state") return state;
        throw UsageError("unknown waveform channel '" + std::string(name) + "'");
    }
};

struct CycleDiagnostics {
    std::size_t index = 0;
    double t_start = 0.0;
    double v_o_start = 0.0;  ///< output at the cycle start (controller sample)
    double v_o_end = 0.0;

    std::optional<double> t_f_meas;  ///< cycle start -> switch-node conduction
    std::optional<double> t_r_meas;  ///< end of conduction -> diode conduction
    bool gate_fired = false;
    bool zvs_ok = true;
    bool zcs_ok = true;
    bool hard_switched = false;
    bool rise_complete = false;
    double v_cs1_at_gate_on = 0.0;
    double diode_off_current = 0.0;

    double q_f = 0.0;  ///< charge delivered by i_Ls during the State-I swing
    double q_r = 0.0;  ///< charge drawn by i_Ls during the State-IV swing
    double v_o_fall_start = 0.0, v_o_fall_end = 0.0;
    double v_o_rise_start = 0.0, v_o_rise_end = 0.0;

    double e_in = 0.0;           ///< integral of i_Ls * v_node
    double e_load = 0.0;         ///< integral of v_o^2 / R
    double e_hard_switch = 0.0;  ///< energy lost when the gate shorts a charged C_S1
    double e_cs1_dump = 0.0;     ///< 1/2 C_S1 v_cs1^2 at the hard turn-on
    double e_diode = 0.0;        ///< forward-drop conduction loss (zero for an ideal diode)
    double delta_e_stored = 0.0;
    double energy_residual = 0.0;  ///< relative energy-balance error

    double v_o_mean = 0.0;
    double v_o_min = 0.0;
    double v_o_max = 0.0;
    double v_o_ripple_pp = 0.0;
    double v_cs1_max = 0.0;
    double v_cd1_max = 0.0;

    std::vector<SwitchingState> states;  ///< visited in order
};

struct SimOptions {
    double v_zvs_tol = 0.01;
    double i_zcs_tol = 1e-3;
    std::size_t samples_per_cycle = 0;  ///< 0 keeps only the event log
    double diode_drop = 0.0;
    int event_grid = 32;
    int extrema_grid = 24;
};

struct CycleResult {
    SwitchCycleState state;
    CycleDiagnostics diag;
    Waveform waveform;
};

namespace detail {

enum class Topology { off, switch_on, diode_on };

inline Topology topology_of(SwitchingState s) {
    switch (s) {
        case SwitchingState::I:
        case SwitchingState::IV: return Topology::off;
        case SwitchingState::II:
        case SwitchingState::III: return Topology::switch_on;
        case SwitchingState::V: return Topology::diode_on;
    }
    return Topology::off;
}

struct Circuit {
    double I, w, R, co, cs1, cd1, csum, vd;
    double a_on, b_on, a_dio, a_off, b_off;

    Circuit(const ValidatedParams& p, double diode_drop)
        : I(p.i_ls_amp()), w(p.omega), R(p.r_load()), co(p.c_o()), cs1(p.c_s1()), cd1(p.c_d1()),
          csum(p.c_sum), vd(diode_drop) {
        const double c_on = co + cd1;
        a_on = 1.0 / (R * c_on);
        b_on = I / c_on;
        a_dio = 1.0 / (R * (co + cs1));
        const double c_eq = csum + cd1 * cs1 / co;
        a_off = (1.0 - cs1 * cd1 / (co * c_eq)) / (R * co);
        b_off = I * cs1 / (co * c_eq);
    }

    double current(double t) const { return I * std::sin(w * t); }

    /// Integral of i over [t0, t1] without the cos - cos cancellation.
    double charge(double t0, double t1) const {
        return 2.0 * I / w * std::sin(0.5 * w * (t0 + t1)) * std::sin(0.5 * w * (t1 - t0));
    }

    double affine(double a, double b, double t0, double y0, double t) const {
        const double decay = std::exp(-a * (t - t0));
        if (b == 0.0) return y0 * decay;
        const double den = a * a + w * w;
        auto P = [&](double s) { return (a * std::sin(w * s) - w * std::cos(w * s)) / den; };
        return (y0 - b * P(t0)) * decay + b * P(t);
    }
};

struct Segment {
    Topology topo = Topology::off;
    SwitchingState label = SwitchingState::I;
    bool gate = false;
    double t0 = 0.0, t1 = 0.0;
    double y0 = 0.0, u0 = 0.0;
};

struct Voltages {
    double v_o, v_cs1, v_cd1;
};

inline double seg_vo(const Circuit& c, const Segment& s, double t) {
    switch (s.topo) {
        case Topology::switch_on: return c.affine(c.a_on, c.b_on, s.t0, s.y0, t);
        case Topology::diode_on: return c.affine(c.a_dio, 0.0, s.t0, s.y0, t);
        case Topology::off: return c.affine(c.a_off, c.b_off, s.t0, s.y0, t);
    }
    return 0.0;
}

inline Voltages seg_eval(const Circuit& c, const Segment& s, double t) {
    const double y = seg_vo(c, s, t);
    switch (s.topo) {
        case Topology::switch_on: return {y, 0.0, y};
        case Topology::diode_on: return {y, y + c.vd, -c.vd};
        case Topology::off: {
            const double u = s.u0 + (c.charge(s.t0, t) - c.cd1 * (y - s.y0)) / c.csum;
            return {y, -u, u + y};
        }
    }
    return {y, 0.0, 0.0};
}

inline double stored_energy_delta(const Circuit& c, const Voltages& a, const Voltages& b) {
    auto d = [](double cap, double x0, double x1) { return 0.5 * cap * (x1 - x0) * (x1 + x0); };
    return d(c.co, a.v_o, b.v_o) + d(c.cs1, a.v_cs1, b.v_cs1) + d(c.cd1, a.v_cd1, b.v_cd1);
}

}  // namespace detail

/// Advances the receiver by exactly one carrier period starting at the
/// positive zero crossing of i_Ls. `t_origin` only offsets the time stamps.
inline CycleResult step_cycle(const SwitchCycleState& s0, const ModulationCommand& cmd,
                              const ValidatedParams& p, const SimOptions& opt = {},
                              double t_origin = 0.0, std::size_t cycle_index = 0) {
    using detail::Topology;
    if (s0.phase != 0.0) throw StateMachineViolation("step_cycle needs a cycle-aligned state");
    const GateTiming timing = sync_gate_timing(0.0, cmd, p);
    const double T = p.t_period;
    const double half = 0.5 * T;
    if (cmd.t_f >= half) throw InvalidDuty("gate delay must be shorter than half a period");

    const detail::Circuit c(p, opt.diode_drop);
    const bool sync = cmd.gate_enabled && c.I > 0.0;
    const double t_on = timing.gate_on;
    const double t_off = std::min(timing.gate_off, T);

    CycleResult out;
    CycleDiagnostics& d = out.diag;
    d.index = cycle_index;
    d.t_start = t_origin;
    d.v_o_start = s0.v_o;
    Waveform& wf = out.waveform;
    wf.period = T;
    wf.samples_per_period = opt.samples_per_cycle;

    Topology topo = detail::topology_of(s0.active);
    double y = s0.v_o;
    double u = -s0.v_cs1;  // only meaningful while floating
    bool gate = false, on_done = !sync, half_done = false, off_done = !sync;
    bool conducted = false;  // switch path has conducted this cycle
    double off_since = 0.0;  // start of the current floating interval after conduction
    // a diode-on start is clamped to the forward drop before anything else
    const detail::Voltages start_v = topo == Topology::diode_on
                                          ? detail::Voltages{s0.v_o, s0.v_o + c.vd, -c.vd}
                                          : detail::Voltages{s0.v_o, s0.v_cs1, s0.v_cd1};

    auto log = [&](double t, EventKind k) { wf.events.push_back({t_origin + t, k}); };
    log(0.0, EventKind::cycle_start);

    if (topo == Topology::diode_on && c.I > 0.0) {
        // i_Ls turns positive: the diode current reaches zero and it blocks.
        d.diode_off_current = std::abs(c.current(0.0));
        d.zcs_ok = d.diode_off_current <= opt.i_zcs_tol;
        topo = Topology::off;
        u = -c.vd - y;
    }
    d.v_o_fall_start = y;

    auto label_of = [&](Topology tp, double t) {
        switch (tp) {
            case Topology::switch_on: return t < half ? SwitchingState::II : SwitchingState::III;
            case Topology::diode_on: return SwitchingState::V;
            case Topology::off: return conducted ? SwitchingState::IV : SwitchingState::I;
        }
        return SwitchingState::I;
    };

    std::vector<detail::Segment> segs;
    double vmean_acc = 0.0;
    d.v_o_min = d.v_o_max = y;
    d.v_cs1_max = s0.v_cs1;
    d.v_cd1_max = s0.v_cd1;

    auto node_voltage = [&](const detail::Segment& sg, double t) {
        return detail::seg_eval(c, sg, t).v_cd1;
    };

    auto close_segment = [&](const detail::Segment& sg) {
        if (!(sg.t1 > sg.t0)) return;
        segs.push_back(sg);
        if (d.states.empty() || d.states.back() != sg.label) d.states.push_back(sg.label);
        d.e_in += numeric::integrate([&](double t) { return c.current(t) * node_voltage(sg, t); },
                                     sg.t0, sg.t1);
        d.e_load += numeric::integrate(
            [&](double t) {
                const double v = detail::seg_vo(c, sg, t);
                return v * v / c.R;
            },
            sg.t0, sg.t1);
        vmean_acc += numeric::integrate([&](double t) { return detail::seg_vo(c, sg, t); }, sg.t0,
                                        sg.t1);
        const double q = numeric::integrate([&](double t) { return c.current(t); }, sg.t0, sg.t1);
        if (sg.label == SwitchingState::I) d.q_f += q;
        if (sg.label == SwitchingState::IV) d.q_r -= q;
        if (sg.topo == Topology::diode_on && c.vd != 0.0) {
            // diode current = -i - C_S1 dv_o/dt while the node is clamped
            const double y1 = detail::seg_vo(c, sg, sg.t1);
            d.e_diode += c.vd * (-c.charge(sg.t0, sg.t1) - c.cs1 * (y1 - sg.y0));
        }
        for (int k = 0; k <= opt.extrema_grid; ++k) {
            const double t = sg.t0 + (sg.t1 - sg.t0) * k / opt.extrema_grid;
            const auto v = detail::seg_eval(c, sg, t);
            d.v_o_min = std::min(d.v_o_min, v.v_o);
            d.v_o_max = std::max(d.v_o_max, v.v_o);
            d.v_cs1_max = std::max(d.v_cs1_max, v.v_cs1);
            d.v_cd1_max = std::max(d.v_cd1_max, v.v_cd1);
        }
    };

    double t = 0.0;
    while (true) {
        double ts = T;
        if (!on_done) ts = std::min(ts, t_on);
        if (!half_done) ts = std::min(ts, half);
        if (!off_done) ts = std::min(ts, t_off);

        detail::Segment sg{topo, label_of(topo, t), gate, t, ts, y, u};
        enum class Natural { none, cs1_zero, cd1_zero } nat = Natural::none;

        if (topo == Topology::off && ts > t) {
            auto switch_pred = [&](double tt) { return detail::seg_eval(c, sg, tt).v_cs1 < 0.0; };
            auto diode_pred = [&](double tt) {
                return detail::seg_eval(c, sg, tt).v_cd1 < -c.vd;
            };
            double prev = t;
            for (int k = 1; k <= opt.event_grid; ++k) {
                const double tk = k == opt.event_grid ? ts : t + (ts - t) * k / opt.event_grid;
                const bool sw = switch_pred(tk);
                const bool di = diode_pred(tk);
                if (sw || di) {
                    const double te_sw = sw ? numeric::bisect_first_true(switch_pred, prev, tk) : tk;
                    const double te_di = di ? numeric::bisect_first_true(diode_pred, prev, tk) : tk;
                    if (sw && (!di || te_sw <= te_di)) {
                        nat = Natural::cs1_zero;
                        sg.t1 = te_sw;
                    } else {
                        nat = Natural::cd1_zero;
                        sg.t1 = te_di;
                    }
                    break;
                }
                prev = tk;
            }
        }

        close_segment(sg);
        if (sg.t1 > sg.t0) {
            const auto v = detail::seg_eval(c, sg, sg.t1);
            y = v.v_o;
            u = v.v_cd1 - v.v_o;
        }
        t = sg.t1;

        if (nat == Natural::cs1_zero) {
            log(t, EventKind::cs1_zero);
            if (!conducted) {
                d.t_f_meas = t;
                d.v_o_fall_end = y;
            }
            topo = Topology::switch_on;
            conducted = true;
            u = 0.0;
            continue;
        }
        if (nat == Natural::cd1_zero) {
            log(t, EventKind::cd1_zero);
            if (conducted) {
                d.t_r_meas = t - off_since;
                d.v_o_rise_end = y;
                d.rise_complete = true;
            }
            topo = Topology::diode_on;
            continue;
        }

        // scheduled edges due at t, in a fixed order
        if (!on_done && t == t_on) {
            on_done = true;
            gate = true;
            d.gate_fired = true;
            log(t, EventKind::gate_on);
            if (topo == Topology::diode_on)
                throw StateMachineViolation("gate turned on while the diode conducts");
            if (topo == Topology::off) {
                const double r = -u;  // v_cs1 about to be shorted
                d.v_cs1_at_gate_on = r;
                if (r > 0.0) {
                    // C_S1 dumps its charge; C_o and C_D1 equalise through the switch
                    const double x = u + y;
                    d.hard_switched = true;
                    d.e_cs1_dump += 0.5 * c.cs1 * r * r;
                    d.e_hard_switch += 0.5 * (c.cs1 + c.co * c.cd1 / (c.co + c.cd1)) * r * r;
                    y = (c.co * y + c.cd1 * x) / (c.co + c.cd1);
                    log(t, EventKind::hard_switch);
                }
                if (!conducted) {
                    d.t_f_meas = t;
                    d.v_o_fall_end = y;
                }
                topo = Topology::switch_on;
                conducted = true;
                u = 0.0;
            }
            d.zvs_ok = d.v_cs1_at_gate_on <= opt.v_zvs_tol;
        }
        if (!half_done && t == half) {
            half_done = true;
            if (c.I > 0.0) log(t, EventKind::ils_zero);
            if (topo == Topology::switch_on && !gate) {
                topo = Topology::off;  // body diode stops conducting
                off_since = t;
                d.v_o_rise_start = y;
                u = 0.0;
            }
        }
        if (!off_done && t == t_off) {
            off_done = true;
            gate = false;
            log(t, EventKind::gate_off);
            if (topo == Topology::switch_on && t >= half) {
                topo = Topology::off;
                off_since = t;
                d.v_o_rise_start = y;
                u = 0.0;
            }
        }
        if (t >= T) break;
    }

    // final state
    const detail::Segment& last = segs.back();
    const auto v_end = detail::seg_eval(c, last, T);
    out.state.v_o = v_end.v_o;
    out.state.v_cs1 = v_end.v_cs1;
    out.state.v_cd1 = v_end.v_cd1;
    out.state.phase = 0.0;
    out.state.active = last.label;
    d.v_o_end = v_end.v_o;

    d.v_o_mean = vmean_acc / T;
    d.v_o_ripple_pp = d.v_o_max - d.v_o_min;
    d.delta_e_stored = detail::stored_energy_delta(c, start_v, v_end);
    const double scale = std::max({std::abs(d.e_in), d.e_load, std::abs(d.delta_e_stored), 1e-300});
    d.energy_residual =
        (d.e_in - d.e_load - d.delta_e_stored - d.e_hard_switch - d.e_diode) / scale;
    if (!d.gate_fired) d.zvs_ok = true;

    if (opt.samples_per_cycle > 0) {
        const std::size_t n = opt.samples_per_cycle;
        std::size_t si = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double tk = T * static_cast<double>(k) / static_cast<double>(n);
            while (si + 1 < segs.size() && segs[si].t1 <= tk) ++si;
            const auto v = detail::seg_eval(c, segs[si], tk);
            wf.t.push_back(t_origin + tk);
            wf.i_ls.push_back(c.current(tk));
            wf.v_cs1.push_back(v.v_cs1);
            wf.v_cd1.push_back(v.v_cd1);
            wf.v_o.push_back(v.v_o);
            wf.gate.push_back(segs[si].gate ? 1.0 : 0.0);
            wf.state.push_back(static_cast<double>(segs[si].label));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Multi-cycle runs

struct RunResult {
    Waveform waveform;
    std::vector<CycleDiagnostics> cycles;
    SwitchCycleState final_state;
    bool steady = false;
    std::optional<std::size_t> steady_cycle;  ///< first cycle of the settled run
};

/// Single-owner simulation session. Parameters may change between cycles
/// (load steps, coupling changes); the circuit state carries over.
class SwitchedSimulator {
public:
    SwitchedSimulator(ValidatedParams p, SwitchCycleState initial, SimOptions opt = {})
        : params_(std::move(p)), state_(initial), opt_(opt) {}

    const SwitchCycleState& state() const noexcept { return state_; }
    const ValidatedParams& params() const noexcept { return params_; }
    void set_params(ValidatedParams p) { params_ = std::move(p); }
    double time() const noexcept { return time_; }
    std::size_t cycle() const noexcept { return cycle_; }

    CycleResult step(const ModulationCommand& cmd) {
        CycleResult r = step_cycle(state_, cmd, params_, opt_, time_, cycle_);
        state_ = r.state;
        time_ += params_.t_period;
        ++cycle_;
        return r;
    }

private:
    ValidatedParams params_;
    SwitchCycleState state_;
    SimOptions opt_;
    double time_ = 0.0;
    std::size_t cycle_ = 0;
};

using CommandSource = std::function<ModulationCommand(std::size_t, const SwitchCycleState&)>;

inline constexpr double steady_tolerance = 1e-6;
inline constexpr std::size_t steady_window = 10;

/// Runs n_cycles cycles, collecting diagnostics and (if sampled) the waveform.
inline RunResult run(const ValidatedParams& p, const CommandSource& source, std::size_t n_cycles,
                     const SwitchCycleState& initial = {}, const SimOptions& opt = {},
                     bool keep_waveform = true) {
    if (n_cycles < 1) throw NonPositiveParameter("n_cycles");
    SwitchedSimulator sim(p, initial, opt);
    RunResult res;
    res.cycles.reserve(n_cycles);
    std::size_t calm = 0;
    for (std::size_t k = 0; k < n_cycles; ++k) {
        CycleResult r = sim.step(source(k, sim.state()));
        if (!res.cycles.empty() &&
            std::abs(r.diag.v_o_mean - res.cycles.back().v_o_mean) < steady_tolerance) {
            if (++calm >= steady_window && !res.steady_cycle) {
                res.steady_cycle = k - steady_window;
            }
        } else {
            calm = 0;
        }
        if (keep_waveform) res.waveform.append(r.waveform);
        res.cycles.push_back(std::move(r.diag));
    }
    res.steady = calm >= steady_window;
    res.final_state = sim.state();
    res.waveform.period = p.t_period;
    res.waveform.samples_per_period = opt.samples_per_cycle;
    return res;
}

inline RunResult run(const ValidatedParams& p, const ModulationCommand& cmd, std::size_t n_cycles,
                     const SwitchCycleState& initial = {}, const SimOptions& opt = {},
                     bool keep_waveform = true) {
    return run(p, [cmd](std::size_t, const SwitchCycleState&) { return cmd; }, n_cycles, initial,
               opt, keep_waveform);
}

/// Periodic steady state for a constant command. v_o is the only state that
/// survives a regular cycle (the node is re-clamped by the diode), so the
/// one-cycle map in v_o is solved by secant iteration and then a few plain
/// cycles let the node voltages settle too.
inline SwitchCycleState periodic_state(const ValidatedParams& p, const ModulationCommand& cmd,
                                       const SimOptions& opt = {}, double v_guess = -1.0) {
    SimOptions quiet = opt;
    quiet.samples_per_cycle = 0;
    auto residual = [&](double v) {
        return step_cycle(SwitchCycleState::at_rest(v), cmd, p, quiet).state.v_o - v;
    };
    double v0 = v_guess >= 0.0 ? v_guess
                               : std::max(1.0, steady_state_vo(p.i_ls_amp(), p.r_load(), cmd.duty,
                                                               p.f_s() * cmd.t_f));
    double v1 = v0 * 1.01 + 1e-3;
    double g0 = residual(v0), g1 = residual(v1);
    for (int it = 0; it < 60 && g1 != g0; ++it) {
        const double v2 = std::max(0.0, v1 - g1 * (v1 - v0) / (g1 - g0));
        v0 = v1;
        g0 = g1;
        v1 = v2;
        g1 = residual(v1);
        if (std::abs(v1 - v0) < 1e-10 * std::max(1.0, v1)) break;
    }
    SwitchCycleState s = SwitchCycleState::at_rest(v1);
    for (int k = 0; k < 8; ++k) s = step_cycle(s, cmd, p, quiet).state;
    return s;
}

// ---------------------------------------------------------------------------
// Spectrum

struct Harmonic {
    int index = 0;
    double amplitude = 0.0;
    double phase = 0.0;  ///< radians, cosine reference
};

struct Spectrum {
    std::vector<Harmonic> harmonics;
    double dc = 0.0;
    double thd = 0.0;  ///< ratio, not percent
};

/// Fourier coefficients at k / period for k = 1..n_harmonics from a uniformly
/// sampled series spanning an integer number of periods.
inline Spectrum spectrum(const std::vector<double>& x, std::size_t samples_per_period,
                         int n_harmonics, std::size_t min_periods = 16) {
    if (samples_per_period == 0 || x.size() % samples_per_period != 0)
        throw NonPeriodicWindow("window is not a whole number of periods");
    if (x.size() / samples_per_period < min_periods)
        throw NonPeriodicWindow("window shorter than " + std::to_string(min_periods) + " periods");
    if (n_harmonics < 1) throw NonPositiveParameter("n_harmonics");
    const double n = static_cast<double>(x.size());
    const double m = static_cast<double>(samples_per_period);
    Spectrum s;
    for (double v : x) s.dc += v;
    s.dc /= n;
    double harm_sq = 0.0;
    for (int k = 1; k <= n_harmonics; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double arg = numeric::two_pi * k * static_cast<double>(j % samples_per_period) / m;
            re += x[j] * std::cos(arg);
            im -= x[j] * std::sin(arg);
        }
        Harmonic h;
        h.index = k;
        h.amplitude = 2.0 / n * std::hypot(re, im);
        h.phase = std::atan2(im, re);
        if (k >= 2) harm_sq += h.amplitude * h.amplitude;
        s.harmonics.push_back(h);
    }
    const double a1 = s.harmonics.front().amplitude;
    s.thd = a1 > 0.0 ? std::sqrt(harm_sq) / a1 : 0.0;
    return s;
}

inline Spectrum spectrum(const Waveform& w, std::string_view channel, int n_harmonics) {
    return spectrum(w.channel(channel), w.samples_per_period, n_harmonics);
}

// ---------------------------------------------------------------------------
// Soft-switching summary

struct SoftSwitchingReport {
    std::size_t cycles = 0;
    double zvs_fraction = 0.0;
    double zcs_fraction = 0.0;
    double worst_v_cs1_at_gate_on = 0.0;
    double total_e_hard_switch = 0.0;
};

inline SoftSwitchingReport soft_switching_report(const std::vector<CycleDiagnostics>& diags) {
    if (diags.empty()) throw NonPositiveParameter("diagnostics list is empty");
    SoftSwitchingReport r;
    r.cycles = diags.size();
    std::size_t zvs = 0, zcs = 0;
    for (const auto& d : diags) {
        zvs += d.zvs_ok ? 1 : 0;
        zcs += d.zcs_ok ? 1 : 0;
        r.worst_v_cs1_at_gate_on = std::max(r.worst_v_cs1_at_gate_on, d.v_cs1_at_gate_on);
        r.total_e_hard_switch += d.e_hard_switch;
    }
    r.zvs_fraction = static_cast<double>(zvs) / static_cast<double>(r.cycles);
    r.zcs_fraction = static_cast<double>(zcs) / static_cast<double>(r.cycles);
    return r;
}

}  // namespace wpr
