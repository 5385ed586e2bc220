#pragma once

// Line-oriented `key = value` run configuration. Numbers accept one trailing
// metric prefix (n, u, m, k, M); `#` starts a comment.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "wpr/errors.hpp"
#include "wpr/receiver.hpp"

namespace wpr {

struct RunConfig {
    ReceiverParams params;

    std::optional<double> duty;
    std::optional<double> phase_delay_norm;  ///< pins the gate delay when set
    double v_ref = 24.0;
    std::optional<double> i_ff;  ///< feedforward current, defaults to i_ls_amp
    double ff_margin = 1.03;
    double f_c = 1000.0;

    std::size_t samples_per_cycle = 400;
    std::size_t cycles = 2000;
    double duty_step = 0.002;
    std::size_t points_per_decade = 30;
    double f_lo = 10.0;
    double f_hi = 10e3;

    double v_zvs_tol = 0.01;
    double i_zcs_tol = 1e-3;
    double diode_drop = 0.0;

    unsigned seed = 0;  ///< reserved; every code path is deterministic
    std::string out_dir = ".";

    double feedforward_current() const { return i_ff.value_or(params.i_ls_amp); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view text, int line) {
    double scale = 1.0;
    if (!text.empty()) {
        switch (text.back()) {
            case 'n': scale = 1e-9; break;
            case 'u': scale = 1e-6; break;
            case 'm': scale = 1e-3; break;
            case 'k': scale = 1e3; break;
            case 'M': scale = 1e6; break;
            default: break;
        }
        if (scale != 1.0) text.remove_suffix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ConfigSyntax(line, "not a number: '" + std::string(text) + "'");
    return v * scale;
}

inline std::size_t parse_count(std::string_view text, int line) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ConfigSyntax(line, "not a non-negative integer: '" + std::string(text) + "'");
    return v;
}

}  // namespace detail

/// Parses configuration text.
inline RunConfig parse_config_text(std::string_view text) {
    RunConfig cfg;
    using Setter = std::function<void(std::string_view, int)>;
    auto num = [](double& dst) {
        return Setter([&dst](std::string_view v, int l) { dst = detail::parse_number(v, l); });
    };
    auto opt = [](std::optional<double>& dst) {
        return Setter([&dst](std::string_view v, int l) { dst = detail::parse_number(v, l); });
    };
    auto count = [](std::size_t& dst) {
        return Setter([&dst](std::string_view v, int l) { dst = detail::parse_count(v, l); });
    };
    ReceiverParams& p = cfg.params;
    const std::map<std::string, Setter, std::less<>> keys{
        {"l_s", num(p.l_s)},
        {"c_s", num(p.c_s)},
        {"c_s1", num(p.c_s1)},
        {"c_d1", num(p.c_d1)},
        {"c_o", num(p.c_o)},
        {"r_load", num(p.r_load)},
        {"f_s", num(p.f_s)},
        {"i_ls_amp", num(p.i_ls_amp)},
        {"r_ls_esr", num(p.r_ls_esr)},
        {"duty", opt(cfg.duty)},
        {"phase_delay_norm", opt(cfg.phase_delay_norm)},
        {"v_ref", num(cfg.v_ref)},
        {"i_ff", opt(cfg.i_ff)},
        {"ff_margin", num(cfg.ff_margin)},
        {"f_c", num(cfg.f_c)},
        {"samples_per_cycle", count(cfg.samples_per_cycle)},
        {"cycles", count(cfg.cycles)},
        {"duty_step", num(cfg.duty_step)},
        {"points_per_decade", count(cfg.points_per_decade)},
        {"f_lo", num(cfg.f_lo)},
        {"f_hi", num(cfg.f_hi)},
        {"v_zvs_tol", num(cfg.v_zvs_tol)},
        {"i_zcs_tol", num(cfg.i_zcs_tol)},
        {"diode_drop", num(cfg.diode_drop)},
        {"seed", Setter([&cfg](std::string_view v, int l) {
             cfg.seed = static_cast<unsigned>(detail::parse_count(v, l));
         })},
        {"out_dir", Setter([&cfg](std::string_view v, int) { cfg.out_dir = std::string(v); })},
    };

    std::set<std::string, std::less<>> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view s = raw;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) throw ConfigSyntax(line, "expected 'key = value'");
        const std::string_view key = detail::trim(s.substr(0, eq));
        const std::string_view value = detail::trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigSyntax(line, "empty key");
        if (value.empty()) throw ConfigSyntax(line, "empty value for '" + std::string(key) + "'");
        const auto it = keys.find(key);
        if (it == keys.end()) throw UnknownKey(line, std::string(key));
        if (!seen.insert(std::string(key)).second)
            throw ConfigSyntax(line, "duplicate key '" + std::string(key) + "'");
        it->second(value, line);
    }
    for (const char* required : {"l_s", "c_s", "c_s1", "c_d1", "c_o", "r_load", "f_s", "i_ls_amp"})
        if (!seen.contains(std::string_view(required))) throw MissingKey(required);
    return cfg;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open configuration '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace wpr
