#pragma once

// Comma-separated tables: header row, 12 significant digits in scientific
// notation for reals, LF line endings regardless of platform.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "wpr/errors.hpp"
#include "wpr/simulator.hpp"

namespace wpr {

using Cell = std::variant<double, long long, std::string>;

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

inline std::string format_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_real(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    explicit Table(std::vector<std::string> cols = {}) : columns(std::move(cols)) {}

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw Error("row width does not match the header");
        rows.push_back(std::move(row));
    }

    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out += ',';
            out += columns[i];
        }
        out += '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                out += format_cell(r[i]);
            }
            out += '\n';
        }
        return out;
    }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw Error("write failed for '" + path.string() + "'");
}

inline void write_table(const std::filesystem::path& path, const Table& t) {
    write_text(path, t.str());
}

inline Table waveform_table(const Waveform& w) {
    Table t({"t", "i_ls", "v_cs1", "v_cd1", "v_o", "gate", "state"});
    t.rows.reserve(w.size());
    for (std::size_t k = 0; k < w.size(); ++k)
        t.add({w.t[k], w.i_ls[k], w.v_cs1[k], w.v_cd1[k], w.v_o[k],
               static_cast<long long>(w.gate[k]), static_cast<long long>(w.state[k])});
    return t;
}

inline Table event_table(const std::vector<Event>& events) {
    Table t({"t", "event"});
    t.rows.reserve(events.size());
    for (const auto& e : events) t.add({e.t, std::string(to_string(e.kind))});
    return t;
}

inline Table cycle_table(const std::vector<CycleDiagnostics>& cycles) {
    Table t({"cycle", "t_start", "v_o_start", "v_o_mean", "v_o_ripple_pp", "t_f_meas", "t_r_meas",
             "zvs_ok", "zcs_ok", "v_cs1_at_gate_on", "q_f", "q_r", "e_in", "e_load",
             "e_hard_switch", "energy_residual"});
    t.rows.reserve(cycles.size());
    for (const auto& d : cycles)
        t.add({static_cast<long long>(d.index), d.t_start, d.v_o_start, d.v_o_mean, d.v_o_ripple_pp,
               d.t_f_meas.value_or(-1.0), d.t_r_meas.value_or(-1.0),
               static_cast<long long>(d.zvs_ok), static_cast<long long>(d.zcs_ok),
               d.v_cs1_at_gate_on, d.q_f, d.q_r, d.e_in, d.e_load, d.e_hard_switch,
               d.energy_residual});
    return t;
}

}  // namespace wpr
