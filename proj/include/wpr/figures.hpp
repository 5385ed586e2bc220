#pragma once

// Data tables behind each reproduced figure. Every table is a pure function
// of the configuration, so repeated runs write byte-identical files.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wpr/analytic.hpp"
#include "wpr/averaged.hpp"
#include "wpr/config.hpp"
#include "wpr/controller.hpp"
#include "wpr/errors.hpp"
#include "wpr/io.hpp"
#include "wpr/parallel.hpp"
#include "wpr/receiver.hpp"
#include "wpr/simulator.hpp"
#include "wpr/small_signal.hpp"
#include "wpr/switched_bode.hpp"

namespace wpr {

/// Named output tables of one figure, keyed by file stem.
using FigureTables = std::map<std::string, Table>;

inline std::vector<std::string> figure_ids() {
    return {"fig4a", "fig5", "fig7", "fig9", "fig13", "fig14", "fig17", "fig19", "fig20"};
}

/// Grid settings shared by the figures; defaults match the shipped configs.
struct FigureGrid {
    double duty_step = 0.002;
    std::size_t points_per_decade = 30;
    double f_lo = 10.0;
    double f_hi = 10e3;
    std::size_t samples_per_cycle = 400;
    std::size_t transient_decimation = 10;

    static FigureGrid from(const RunConfig& c) {
        FigureGrid g;
        g.duty_step = c.duty_step;
        g.points_per_decade = c.points_per_decade;
        g.f_lo = c.f_lo;
        g.f_hi = c.f_hi;
        g.samples_per_cycle = c.samples_per_cycle;
        return g;
    }
};

/// Duty grid lo, lo + step, ... up to hi, built from integer multiples so
/// that the values do not drift.
inline std::vector<double> duty_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw NonPositiveParameter("duty grid");
    std::vector<double> g;
    const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    for (long long k = 0; k <= n; ++k) g.push_back(lo + static_cast<double>(k) * step);
    return g;
}

inline Table bode_table(const std::vector<BodePoint>& pts) {
    Table t({"f_hz", "mag_db", "phase_deg"});
    for (const auto& b : pts) t.add({b.f_hz, b.mag_db, b.phase_deg});
    return t;
}

/// Command used by the steady-state figures: the configured duty, and the
/// pinned delay when given, the margin-stretched feedforward otherwise.
inline ModulationCommand configured_command(const RunConfig& cfg, const ValidatedParams& p) {
    const double duty = cfg.duty.value_or(0.532);
    const double t_f = cfg.phase_delay_norm
                           ? *cfg.phase_delay_norm / p.f_s()
                           : cfg.ff_margin * feedforward_tf(cfg.v_ref, cfg.feedforward_current(), p);
    return make_command(duty, t_f, p);
}

// ---------------------------------------------------------------------------

inline FigureTables figure_fig4a(const ValidatedParams& p, const FigureGrid& g) {
    Table t({"r_load", "duty", "v_o", "t_f", "phase_delay_norm", "regulable"});
    const auto rows = vo_vs_duty_curve(p, {10.0, 20.0, 30.0, 38.09}, duty_grid(0.3, 0.9, g.duty_step));
    for (const auto& r : rows) {
        if (r.error) continue;
        t.add({r.r_load, r.duty, r.v_o, r.t_f, r.phase_delay_norm, static_cast<long long>(r.regulable)});
    }
    return {{"fig4a", t}};
}

inline FigureTables figure_fig5(const ValidatedParams& p, double phase_delay_norm,
                                const FigureGrid& g) {
    Table t({"duty", "v_o_ideal", "v_o_resonant", "ideal_in_range", "resonant_in_range"});
    const DutyBounds ideal = duty_bounds(0.0);
    const DutyBounds res = duty_bounds(phase_delay_norm);
    for (double d : duty_grid(0.25, 0.95, g.duty_step)) {
        t.add({d, steady_state_vo(p.i_ls_amp(), p.r_load(), d, 0.0),
               steady_state_vo(p.i_ls_amp(), p.r_load(), d, phase_delay_norm),
               static_cast<long long>(ideal.contains(d)), static_cast<long long>(res.contains(d))});
    }
    Table s({"phase_delay_norm", "peak_ideal", "peak_resonant", "peak_drop", "d_min_shift",
             "d_max_shift"});
    const double peak_ideal = steady_state_vo(p.i_ls_amp(), p.r_load(), optimal_duty(0.0), 0.0);
    const double peak_res = steady_state_vo(p.i_ls_amp(), p.r_load(), optimal_duty(phase_delay_norm),
                                            phase_delay_norm);
    s.add({phase_delay_norm, peak_ideal, peak_res,
           resonant_cap_voltage_drop(p.i_ls_amp(), p.r_load(), phase_delay_norm),
           ideal.d_min - res.d_min, ideal.d_max - res.d_max});
    return {{"fig5", t}, {"fig5_summary", s}};
}

inline FigureTables figure_fig7(const ValidatedParams& p, const OperatingPoint& op,
                                const FigureGrid& g) {
    const auto grid = log_grid(g.f_lo, g.f_hi, static_cast<int>(g.points_per_decade));
    const auto tf = plant_tf(p, op);
    FigureTables out{{"fig7_analytic", bode_table(bode(tf, grid))},
                     {"fig7_oracle", bode_table(perturb_bode_oracle(p, op, grid))}};
    out.emplace("fig7_switched_spot", bode_table(switched_bode_spot(p, op, {100.0, 400.0, 1000.0})));
    return out;
}

inline FigureTables figure_fig9(const ValidatedParams& p, const OperatingPoint& op, double f_c,
                                const FigureGrid& g) {
    const auto grid = log_grid(g.f_lo, g.f_hi, static_cast<int>(g.points_per_decade));
    const auto tf = plant_tf(p, op);
    const PiGains gains = design_pi(p, op, f_c);
    const LoopTf loop{tf, gains};
    const LoopMargins m = loop_margins(tf, gains);
    Table s({"k_p", "k_i", "crossover_hz", "phase_margin_deg", "gain_at_10hz_db"});
    s.add({gains.k_p, gains.k_i, m.crossover_hz, m.phase_margin_deg, m.gain_at_10hz_db});
    return {{"fig9_open", bode_table(bode(loop, grid))},
            {"fig9_closed", bode_table(closed_loop_bode(loop, grid))},
            {"fig9_summary", s}};
}

/// Captures `cycles` steady-state periods at the configured command.
inline RunResult steady_capture(const ValidatedParams& p, const ModulationCommand& cmd,
                                std::size_t cycles, std::size_t samples_per_cycle) {
    SimOptions opt;
    opt.samples_per_cycle = samples_per_cycle;
    return run(p, cmd, cycles, periodic_state(p, cmd, opt), opt);
}

inline FigureTables figure_fig13(const ValidatedParams& p, const ModulationCommand& cmd,
                                 const FigureGrid& g) {
    const RunResult r = steady_capture(p, cmd, 3, g.samples_per_cycle);
    Table s({"v_o_mean", "v_o_ripple_pp", "t_f_meas", "t_r_meas", "v_cd1_max", "zvs_ok"});
    const auto& d = r.cycles.back();
    s.add({d.v_o_mean, d.v_o_ripple_pp, d.t_f_meas.value_or(-1.0), d.t_r_meas.value_or(-1.0),
           d.v_cd1_max, static_cast<long long>(d.zvs_ok)});
    return {{"fig13_waveform", waveform_table(r.waveform)},
            {"fig13_events", event_table(r.waveform.events)},
            {"fig13_summary", s}};
}

inline constexpr int spectrum_harmonics = 50;

inline FigureTables figure_fig14(const ValidatedParams& p, const ModulationCommand& cmd,
                                 const FigureGrid& g) {
    const RunResult r = steady_capture(p, cmd, 16, g.samples_per_cycle);
    const Spectrum v = spectrum(r.waveform, "v_cd1", spectrum_harmonics);
    const Spectrum i = spectrum(r.waveform, "i_ls", spectrum_harmonics);
    Table t({"harmonic", "f_hz", "v_cd1_amp", "v_cd1_phase", "i_ls_amp", "i_ls_phase"});
    for (std::size_t k = 0; k < v.harmonics.size(); ++k)
        t.add({static_cast<long long>(v.harmonics[k].index), v.harmonics[k].index * p.f_s(),
               v.harmonics[k].amplitude, v.harmonics[k].phase, i.harmonics[k].amplitude,
               i.harmonics[k].phase});
    Table s({"channel", "fundamental", "thd_percent"});
    s.add({std::string("v_cd1"), v.harmonics.front().amplitude, 100.0 * v.thd});
    s.add({std::string("i_ls"), i.harmonics.front().amplitude, 100.0 * i.thd});
    return {{"fig14_spectrum", t}, {"fig14_summary", s}};
}

struct CouplingPoint {
    double i_ls_amp = 0.0;
    TransientMetrics metrics;
    double duty = 0.0;
};

/// Closed-loop steady state at each coil current of the 10 W sweep.
inline std::vector<CouplingPoint> coupling_sweep(const ValidatedParams& base,
                                                 const std::vector<double>& currents) {
    std::vector<CouplingPoint> pts(currents.size());
    parallel_for(currents.size(), [&](std::size_t k) {
        const Scenario sc = coupling_point(currents[k]);
        const TransientRecord rec = closed_loop_run(sc, scenario_gains(sc, base), base);
        pts[k] = {currents[k], rec.metrics, rec.rows.back().duty};
    });
    return pts;
}

inline std::vector<double> coupling_sweep_currents() {
    std::vector<double> i;
    for (int k = 0; k <= 23; ++k) i.push_back(coupling_sweep_i_min + 0.05 * k);
    return i;
}

inline FigureTables figure_fig17(const ValidatedParams& base) {
    const auto pts = coupling_sweep(base, coupling_sweep_currents());
    Table t({"i_ls_amp", "v_o", "regulation_error", "duty", "zvs_fraction", "zcs_fraction"});
    double worst = 0.0;
    for (const auto& pt : pts) {
        const double err = pt.metrics.final_value - 24.0;
        worst = std::max(worst, std::abs(err));
        t.add({pt.i_ls_amp, pt.metrics.final_value, err, pt.duty, pt.metrics.zvs_fraction,
               pt.metrics.zcs_fraction});
    }
    Table s({"max_abs_regulation_error"});
    s.add({worst});
    return {{"fig17", t}, {"fig17_summary", s}};
}

inline Table transient_table(const TransientRecord& rec, std::size_t decimation) {
    Table t({"t", "v_o_sample", "v_o_mean", "duty", "r_load", "i_ls_amp", "v_ref", "zvs_ok",
             "zcs_ok"});
    for (std::size_t k = 0; k < rec.rows.size(); k += std::max<std::size_t>(1, decimation)) {
        const auto& r = rec.rows[k];
        t.add({r.t, r.v_o_sample, r.v_o_mean, r.duty, r.r_load, r.i_ls_amp, r.v_ref,
               static_cast<long long>(r.zvs_ok), static_cast<long long>(r.zcs_ok)});
    }
    return t;
}

inline Table metrics_table(const std::vector<TransientRecord>& recs) {
    Table t({"scenario", "k_p", "k_i", "t_f_cmd", "final_value", "settling_time", "overshoot",
             "undershoot", "steady_state_error", "tail_peak_to_peak", "zvs_fraction",
             "zcs_fraction", "duty_violations", "regulation_failed"});
    for (const auto& r : recs) {
        const auto& m = r.metrics;
        t.add({r.scenario, r.gains.k_p, r.gains.k_i, r.t_f_cmd, m.final_value,
               m.settling_time.value_or(-1.0), m.overshoot, m.undershoot, m.steady_state_error,
               m.tail_peak_to_peak, m.zvs_fraction, m.zcs_fraction,
               static_cast<long long>(m.duty_violations), static_cast<long long>(m.regulation_failed)});
    }
    return t;
}

inline TransientRecord run_scenario(const std::string& name, const ValidatedParams& base) {
    const Scenario sc = make_scenario(name);
    return closed_loop_run(sc, scenario_gains(sc, base), base);
}

inline FigureTables transient_figure(const std::string& stem, const std::vector<std::string>& names,
                                     const ValidatedParams& base, const FigureGrid& g) {
    std::vector<TransientRecord> recs(names.size());
    parallel_for(names.size(), [&](std::size_t k) { recs[k] = run_scenario(names[k], base); });
    FigureTables out;
    for (std::size_t k = 0; k < names.size(); ++k)
        out.emplace(stem + "_" + names[k], transient_table(recs[k], g.transient_decimation));
    out.emplace(stem + "_metrics", metrics_table(recs));
    return out;
}

// ---------------------------------------------------------------------------

/// Builds the tables of one figure. Without a configuration the figure's own
/// reference conditions are used.
inline FigureTables figure_tables(const std::string& id, const std::optional<RunConfig>& cfg = {}) {
    const FigureGrid g = cfg ? FigureGrid::from(*cfg) : FigureGrid{};
    const ValidatedParams table2 = validate(cfg ? cfg->params : table2_params());
    const ValidatedParams fig7 = validate(cfg ? cfg->params : fig7_params());

    if (id == "fig4a") return figure_fig4a(table2, g);
    if (id == "fig5") {
        const double pd = cfg && cfg->phase_delay_norm ? *cfg->phase_delay_norm : 0.0672;
        return figure_fig5(table2, pd, g);
    }
    if (id == "fig7" || id == "fig9") {
        const double d = cfg && cfg->duty ? *cfg->duty : 0.5;
        const double pd = cfg && cfg->phase_delay_norm ? *cfg->phase_delay_norm : 0.1;
        const OperatingPoint op = pinned_operating_point(fig7, d, pd);
        if (id == "fig7") return figure_fig7(fig7, op, g);
        return figure_fig9(fig7, op, cfg ? cfg->f_c : 1000.0, g);
    }
    if (id == "fig13" || id == "fig14") {
        RunConfig c = cfg.value_or(RunConfig{});
        if (!cfg) {
            c.params = table2_params();
            c.duty = 0.532;
            c.phase_delay_norm = 0.0672;
        }
        const ModulationCommand cmd = configured_command(c, table2);
        return id == "fig13" ? figure_fig13(table2, cmd, g) : figure_fig14(table2, cmd, g);
    }
    if (id == "fig17") return figure_fig17(table2);
    if (id == "fig19") return transient_figure("fig19", {"load_step_up", "load_step_down"}, table2, g);
    if (id == "fig20")
        return transient_figure("fig20", {"current_ramp_up", "current_ramp_down"}, table2, g);
    throw UnknownFigure(id);
}

/// Generic matplotlib helper: plots every numeric column against the first.
inline const char* plot_script_text() {
    return R"(#!/usr/bin/env python3
"""Plot each CSV table given on the command line: every column against the first."""
import sys

import matplotlib.pyplot as plt
import pandas as pd

for path in sys.argv[1:]:
    df = pd.read_csv(path)
    if len(df.columns) < 2 or len(df) < 2:
        continue
    x = df.columns[0]
    cols = [c for c in df.columns[1:] if pd.api.types.is_numeric_dtype(df[c])]
    fig, axes = plt.subplots(len(cols), 1, sharex=True, figsize=(7, 2 * len(cols)), squeeze=False)
    for ax, c in zip(axes[:, 0], cols):
        ax.plot(df[x], df[c])
        ax.set_ylabel(c)
        if x == "f_hz":
            ax.set_xscale("log")
    axes[-1, 0].set_xlabel(x)
    fig.tight_layout()
    fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
    plt.close(fig)
)";
}

/// Writes the figure's tables as <out_dir>/<stem>.csv and returns the paths.
inline std::vector<std::filesystem::path> reproduce(const std::string& id,
                                                    const std::filesystem::path& out_dir,
                                                    const std::optional<RunConfig>& cfg = {}) {
    const FigureTables tables = figure_tables(id, cfg);
    std::vector<std::filesystem::path> written;
    for (const auto& [stem, table] : tables) {
        const auto path = out_dir / (stem + ".csv");
        write_table(path, table);
        written.push_back(path);
    }
    write_text(out_dir / "plot_tables.py", plot_script_text());
    return written;
}

}  // namespace wpr
