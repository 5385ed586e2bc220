// wprsim: command-line front end for the receiver modelling library.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 numerical failure, 4 usage error or unknown command.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wpr/wpr.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit : int { ok = 0, failure = 1, config_error = 2, numerical_error = 3, usage_error = 4 };

struct Cli {
    std::string config_path;
    std::string out_dir;
    std::optional<double> duty;
    std::string sweep;
    std::size_t cycles = 0;
    bool steady_start = false;
    std::string scenario;
    std::string figure;
};

wpr::RunConfig default_config() {
    wpr::RunConfig c;
    c.params = wpr::table2_params();
    c.duty = 0.532;
    c.phase_delay_norm = 0.0672;
    return c;
}

wpr::RunConfig load(const Cli& cli) {
    wpr::RunConfig c = cli.config_path.empty() ? default_config() : wpr::parse_config(cli.config_path);
    if (!cli.out_dir.empty()) c.out_dir = cli.out_dir;
    if (cli.duty) c.duty = *cli.duty;
    return c;
}

void announce(const fs::path& p) { std::printf("wrote %s\n", p.string().c_str()); }

void save(const fs::path& p, const wpr::Table& t) {
    wpr::write_table(p, t);
    announce(p);
}

/// Operating point of the configuration: pinned delay when given, the
/// self-consistent fall time otherwise.
wpr::OperatingPoint config_op(const wpr::RunConfig& c, const wpr::ValidatedParams& p, double duty) {
    return c.phase_delay_norm ? wpr::pinned_operating_point(p, duty, *c.phase_delay_norm)
                              : wpr::solve_operating_point(p, duty);
}

std::vector<double> parse_sweep(const std::string& s) {
    double v[3];
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
        const auto colon = s.find(':', pos);
        if ((k < 2) == (colon == std::string::npos))
            throw wpr::UsageError("--sweep expects start:stop:step, got '" + s + "'");
        const std::string part = s.substr(pos, colon == std::string::npos ? colon : colon - pos);
        try {
            std::size_t used = 0;
            v[k] = std::stod(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::logic_error&) {
            throw wpr::UsageError("--sweep: not a number '" + part + "'");
        }
        pos = colon + 1;
    }
    if (!(v[2] > 0.0) || v[1] < v[0]) throw wpr::UsageError("--sweep needs step > 0 and stop >= start");
    return wpr::duty_grid(v[0], v[1], v[2]);
}

// ---------------------------------------------------------------------------

int cmd_validate(const Cli& cli) {
    const wpr::RunConfig c = load(cli);
    const wpr::ValidatedParams p = wpr::validate(c.params);
    std::printf("parameters valid\n");
    std::printf("  omega               %.6e rad/s\n", p.omega);
    std::printf("  c_s1 + c_d1         %.6e F\n", p.c_sum);
    std::printf("  resonance mismatch  %.4f %%\n", 100.0 * p.resonance_mismatch);
    if (p.resonance_mismatch > wpr::resonance_warning_threshold)
        std::printf("  warning: l_s and c_s are detuned from f_s\n");
    if (p.i_ls_amp() > 0.0 && c.v_ref > 0.0)
        std::printf("  fall time at v_ref  %.6e s (approx), %.6e s (exact)\n",
                    wpr::fall_time_approx(p, c.v_ref), wpr::fall_time_exact(p, c.v_ref));
    return ok;
}

int cmd_design(const Cli& cli) {
    const wpr::RunConfig c = load(cli);
    const wpr::ValidatedParams p = wpr::validate(c.params);
    const double duty = c.duty.value_or(0.5);
    const wpr::OperatingPoint op = config_op(c, p, duty);
    const auto tf = wpr::plant_tf(p, op);
    const wpr::PiGains g = wpr::design_pi(p, op, c.f_c);
    const wpr::LoopMargins m = wpr::loop_margins(tf, g);

    wpr::Table t({"quantity", "value"});
    auto row = [&t](const char* k, double v) {
        t.add({std::string(k), v});
        std::printf("  %-22s %.6e\n", k, v);
    };
    std::printf("sizing\n");
    if (c.params.r_ls_esr > 0.0) {
        const double q = p.omega * p.l_s() / c.params.r_ls_esr;
        row("coil_q", q);
        row("l_s_for_q", wpr::size_inductor(q, c.params.r_ls_esr, p.f_s()));
    }
    row("c_s_resonant", wpr::size_series_cap(p.l_s(), p.f_s()));
    row("ripple_estimate", wpr::ripple_estimate(p.i_ls_amp(), p.f_s(), p.c_o()));
    row("c_o_for_1pct_ripple", wpr::min_output_cap(p.i_ls_amp(), 0.01, c.v_ref, p.f_s()));
    std::printf("operating point\n");
    row("duty", op.duty);
    row("phase_delay_norm", op.phase_delay_norm);
    row("v_o", op.v_o);
    row("plant_dc_gain", tf.dc_gain);
    row("plant_pole_hz", tf.pole_hz);
    std::printf("controller\n");
    row("k_p", g.k_p);
    row("k_i", g.k_i);
    row("crossover_hz", m.crossover_hz);
    row("phase_margin_deg", m.phase_margin_deg);
    row("gain_at_10hz_db", m.gain_at_10hz_db);
    save(fs::path(c.out_dir) / "design.csv", t);
    return ok;
}

int cmd_steady(const Cli& cli) {
    const wpr::RunConfig c = load(cli);
    const wpr::ValidatedParams p = wpr::validate(c.params);
    std::vector<double> duties;
    if (!cli.sweep.empty()) {
        duties = parse_sweep(cli.sweep);
    } else {
        if (!c.duty) throw wpr::UsageError("steady needs --duty, --sweep or a duty in the config");
        duties = {*c.duty};
    }
    wpr::Table t({"duty", "v_o", "t_f", "phase_delay_norm", "regulable", "t_r"});
    for (double d : duties) {
        const wpr::OperatingPoint op = config_op(c, p, d);
        double t_r = -1.0;
        try {
            t_r = wpr::rise_time(p, op);
        } catch (const wpr::NumericalError&) {
            // No complete rise at this point; the column keeps its sentinel.
        }
        t.add({d, op.v_o, op.t_f, op.phase_delay_norm, static_cast<long long>(op.regulable), t_r});
        if (duties.size() == 1)
            std::printf("duty %.4f: v_o = %.6f V, t_f = %.6e s, regulable = %s\n", d, op.v_o, op.t_f,
                        op.regulable ? "yes" : "no");
    }
    save(fs::path(c.out_dir) / "steady.csv", t);
    return ok;
}

int cmd_bode(const Cli& cli) {
    const wpr::RunConfig c = load(cli);
    const wpr::ValidatedParams p = wpr::validate(c.params);
    const wpr::OperatingPoint op = config_op(c, p, c.duty.value_or(0.5));
    const auto grid = wpr::log_grid(c.f_lo, c.f_hi, static_cast<int>(c.points_per_decade));
    const auto tf = wpr::plant_tf(p, op);
    const wpr::LoopTf loop{tf, wpr::design_pi(p, op, c.f_c)};
    const fs::path out(c.out_dir);
    save(out / "bode_plant.csv", wpr::bode_table(wpr::bode(tf, grid)));
    save(out / "bode_oracle.csv", wpr::bode_table(wpr::perturb_bode_oracle(p, op, grid)));
    save(out / "bode_loop.csv", wpr::bode_table(wpr::bode(loop, grid)));
    save(out / "bode_closed.csv", wpr::bode_table(wpr::closed_loop_bode(loop, grid)));
    return ok;
}

int cmd_simulate(const Cli& cli) {
    const wpr::RunConfig c = load(cli);
    const wpr::ValidatedParams p = wpr::validate(c.params);
    const std::size_t n = cli.cycles ? cli.cycles : c.cycles;
    const wpr::ModulationCommand cmd = wpr::configured_command(c, p);

    wpr::SimOptions opt;
    opt.v_zvs_tol = c.v_zvs_tol;
    opt.i_zcs_tol = c.i_zcs_tol;
    opt.diode_drop = c.diode_drop;
    const wpr::SwitchCycleState start =
        cli.steady_start ? wpr::periodic_state(p, cmd, opt) : wpr::SwitchCycleState{};

    // Only the last few periods are sampled; the diagnostics cover every cycle.
    constexpr std::size_t sampled_cycles = 20;
    const std::size_t tail = std::min(n, sampled_cycles);
    wpr::RunResult head;
    if (n > tail) head = wpr::run(p, cmd, n - tail, start, opt, false);
    wpr::SimOptions sampled = opt;
    sampled.samples_per_cycle = c.samples_per_cycle;
    wpr::RunResult last = wpr::run(p, cmd, tail, n > tail ? head.final_state : start, sampled, true);

    const double offset = static_cast<double>(n - tail) * p.t_period;
    for (auto& t : last.waveform.t) t += offset;
    for (auto& e : last.waveform.events) e.t += offset;
    for (auto& d : last.cycles) {
        d.index += n - tail;
        d.t_start += offset;
    }
    std::vector<wpr::CycleDiagnostics> all = std::move(head.cycles);
    all.insert(all.end(), last.cycles.begin(), last.cycles.end());

    const fs::path out(c.out_dir);
    save(out / "cycles.csv", wpr::cycle_table(all));
    save(out / "waveform.csv", wpr::waveform_table(last.waveform));
    save(out / "events.csv", wpr::event_table(last.waveform.events));

    const auto rep = wpr::soft_switching_report(all);
    const auto& f = all.back();
    std::printf("cycles %zu, final v_o mean %.6f V, ripple %.6e V\n", all.size(), f.v_o_mean,
                f.v_o_ripple_pp);
    std::printf("zvs %.4f, zcs %.4f, hard-switching energy %.6e J\n", rep.zvs_fraction,
                rep.zcs_fraction, rep.total_e_hard_switch);
    return ok;
}

int cmd_transient(const Cli& cli) {
    const wpr::RunConfig c = load(cli);
    const wpr::ValidatedParams base = wpr::validate(c.params);
    const wpr::TransientRecord rec = wpr::run_scenario(cli.scenario, base);
    const fs::path out(c.out_dir);
    save(out / ("transient_" + cli.scenario + ".csv"), wpr::transient_table(rec, 1));
    save(out / ("transient_" + cli.scenario + "_metrics.csv"), wpr::metrics_table({rec}));
    const auto& m = rec.metrics;
    std::printf("%s: final %.6f V, error %.3e, overshoot %.4f, undershoot %.4f, settling %s\n",
                rec.scenario.c_str(), m.final_value, m.steady_state_error, m.overshoot, m.undershoot,
                m.settling_time ? (std::to_string(*m.settling_time) + " s").c_str() : "none");
    std::printf("zvs %.4f, zcs %.4f, regulation %s\n", m.zvs_fraction, m.zcs_fraction,
                m.regulation_failed ? "FAILED" : "ok");
    return ok;
}

int cmd_reproduce(const Cli& cli) {
    std::optional<wpr::RunConfig> cfg;
    if (!cli.config_path.empty()) cfg = wpr::parse_config(cli.config_path);
    const std::string out = !cli.out_dir.empty() ? cli.out_dir : cfg ? cfg->out_dir : ".";
    for (const auto& p : wpr::reproduce(cli.figure, out, cfg)) announce(p);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-active rectifier receiver: analysis, simulation and control design"};
    app.require_subcommand(1);
    app.fallthrough();

    Cli cli;
    app.add_option("--config", cli.config_path, "key = value configuration file");
    app.add_option("--out", cli.out_dir, "output directory for tables");

    auto* validate = app.add_subcommand("validate", "check parameters and print derived values");
    auto* design = app.add_subcommand("design", "component sizing and PI design with margins");
    auto* steady = app.add_subcommand("steady", "averaged steady-state output at one or many duties");
    steady->add_option("--duty", cli.duty, "duty ratio");
    steady->add_option("--sweep", cli.sweep, "duty sweep start:stop:step");
    auto* bode = app.add_subcommand("bode", "plant, loop and oracle Bode tables");
    auto* simulate = app.add_subcommand("simulate", "switched simulation at a fixed command");
    simulate->add_option("--cycles", cli.cycles, "number of switching cycles");
    simulate->add_flag("--steady-start", cli.steady_start, "start from the periodic steady state");
    auto* transient = app.add_subcommand("transient", "closed-loop scenario");
    transient->add_option("--scenario", cli.scenario, "scenario name")->required();
    auto* reproduce = app.add_subcommand("reproduce", "emit the data behind a figure");
    reproduce->add_option("figure", cli.figure, "figure id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage_error;
    }

    try {
        if (*validate) return cmd_validate(cli);
        if (*design) return cmd_design(cli);
        if (*steady) return cmd_steady(cli);
        if (*bode) return cmd_bode(cli);
        if (*simulate) return cmd_simulate(cli);
        if (*transient) return cmd_transient(cli);
        if (*reproduce) return cmd_reproduce(cli);
        return usage_error;
    } catch (const wpr::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return config_error;
    } catch (const wpr::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return numerical_error;
    } catch (const wpr::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return usage_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return failure;
    }
}
