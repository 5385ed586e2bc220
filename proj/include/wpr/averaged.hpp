#pragma once

// Cycle-averaged output-capacitor model. For a fixed duty and delay the
// averaged dynamics are affine in v_o:
//   C_o dv_o/dt = |I|/(2 pi) (cos(2 pi f t_f) - cos(2 pi D + 2 pi f t_f)) - v_o / R
// so each constant-command piece is integrated by its exact exponential.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wpr/analytic.hpp"
#include "wpr/errors.hpp"
#include "wpr/receiver.hpp"

namespace wpr {

struct AveragedState {
    double v_o = 0.0;
    double t = 0.0;
};

/// How the gate delay inside a duty schedule is obtained.
enum class DelayMode {
    pinned,           ///< use the schedule's phase_delay_norm as given
    feedforward,      ///< fall_time_approx at a fixed reference voltage
    self_consistent,  ///< fall_time_approx at the instantaneous v_o
};

struct DutyPoint {
    double duty = 0.5;
    double phase_delay_norm = 0.0;
};

class DutySchedule {
public:
    struct Piece {
        double t_start = 0.0;
        DutyPoint cmd;
    };

    DelayMode mode = DelayMode::feedforward;
    double v_ref = 24.0;  ///< reference used by DelayMode::feedforward

    static DutySchedule constant(DutyPoint cmd, DelayMode mode = DelayMode::pinned) {
        DutySchedule s;
        s.pieces_.push_back({-INFINITY, cmd});
        s.mode = mode;
        return s;
    }

    /// Piecewise-constant; pieces must be ordered by t_start, the first one
    /// extends backwards to -inf.
    static DutySchedule piecewise(std::vector<Piece> pieces, DelayMode mode = DelayMode::pinned) {
        if (pieces.empty()) throw InvalidDuty("empty duty schedule");
        for (const auto& pc : pieces) check(pc.cmd);
        DutySchedule s;
        s.pieces_ = std::move(pieces);
        s.pieces_.front().t_start = -INFINITY;
        s.mode = mode;
        return s;
    }

    /// Arbitrary t -> command map, held constant over `step` and evaluated at
    /// the midpoint of each hold.
    static DutySchedule callable(std::function<DutyPoint(double)> fn, double step,
                                 DelayMode mode = DelayMode::pinned) {
        if (!(step > 0.0)) throw NonPositiveParameter("step");
        DutySchedule s;
        s.fn_ = std::move(fn);
        s.step_ = step;
        s.mode = mode;
        return s;
    }

    bool is_callable() const noexcept { return static_cast<bool>(fn_); }
    double step() const noexcept { return step_; }
    const std::vector<Piece>& pieces() const noexcept { return pieces_; }

    DutyPoint at(double t) const {
        if (fn_) {
            auto c = fn_(t);
            check(c);
            return c;
        }
        const Piece* cur = &pieces_.front();
        for (const auto& pc : pieces_)
            if (pc.t_start <= t) cur = &pc;
        return cur->cmd;
    }

    /// Next time after t at which the piecewise command changes.
    double next_change(double t) const {
        for (const auto& pc : pieces_)
            if (pc.t_start > t) return pc.t_start;
        return INFINITY;
    }

private:
    static void check(const DutyPoint& c) {
        if (!(c.duty > 0.0 && c.duty < 1.0)) throw InvalidDuty("schedule duty outside (0, 1)");
    }

    std::vector<Piece> pieces_;
    std::function<DutyPoint(double)> fn_;
    double step_ = 0.0;
};

/// dv_o/dt of the averaged model.
inline double averaged_rhs(double v_o, double duty, double phase_delay_norm,
                           const ValidatedParams& p) {
    const double src = steady_state_vo(p.i_ls_amp(), p.r_load(), duty, phase_delay_norm);
    return (src - v_o) / (p.r_load() * p.c_o());
}

struct AveragedTrajectory {
    std::vector<AveragedState> samples;
    bool clamped = false;  ///< integration tried to drive v_o below -1 uV
};

namespace detail {

inline double schedule_delay(const DutySchedule& s, const DutyPoint& c, double v_o,
                             const ValidatedParams& p) {
    switch (s.mode) {
        case DelayMode::pinned: return c.phase_delay_norm;
        case DelayMode::feedforward: return p.f_s() * fall_time_approx(p, s.v_ref);
        case DelayMode::self_consistent:
            return p.i_ls_amp() > 0.0 ? p.f_s() * fall_time_approx(p, std::max(v_o, 0.0)) : 0.0;
    }
    return c.phase_delay_norm;
}

}  // namespace detail

/// Integrates the averaged model from `initial` over `horizon`, sampling every
/// `sample_interval` (the final time is always included).
inline AveragedTrajectory integrate_averaged(const AveragedState& initial,
                                             const DutySchedule& schedule, double horizon,
                                             const ValidatedParams& p, double sample_interval) {
    if (!(horizon > 0.0)) throw NonPositiveParameter("horizon");
    if (!(sample_interval > 0.0)) throw NonPositiveParameter("sample_interval");
    const double tau = p.r_load() * p.c_o();
    // self-consistent delay changes with v_o: re-evaluate it on a fine grid
    const double sc_step = tau / 400.0;

    AveragedTrajectory out;
    double t = initial.t;
    double v = initial.v_o;
    const double t_end = initial.t + horizon;
    out.samples.push_back({v, t});
    std::size_t next_sample = 1;

    while (t < t_end) {
        double t_next = t_end;
        const double t_sample = initial.t + static_cast<double>(next_sample) * sample_interval;
        if (t_sample < t_next) t_next = t_sample;
        if (schedule.is_callable()) {
            t_next = std::min(t_next, t + schedule.step());
        } else {
            t_next = std::min(t_next, schedule.next_change(t));
        }
        if (schedule.mode == DelayMode::self_consistent) t_next = std::min(t_next, t + sc_step);

        const double t_eval = schedule.is_callable() ? 0.5 * (t + t_next) : t;
        const DutyPoint cmd = schedule.at(t_eval);
        const double pd = detail::schedule_delay(schedule, cmd, v, p);
        const double v_ss = steady_state_vo(p.i_ls_amp(), p.r_load(), cmd.duty, pd);
        v = v_ss + (v - v_ss) * std::exp(-(t_next - t) / tau);
        if (v < -1e-6) {
            out.clamped = true;
            v = 0.0;
        }
        t = t_next;
        if (t >= t_sample || t >= t_end) {
            if (t >= t_sample) ++next_sample;
            if (out.samples.back().t != t) out.samples.push_back({v, t});
        }
    }
    return out;
}

struct CurveRow {
    double r_load = 0.0;
    double duty = 0.0;
    double v_o = 0.0;
    double t_f = 0.0;
    double phase_delay_norm = 0.0;
    bool regulable = false;
    std::optional<std::string> error;  ///< solver failure for this row
};

/// Output-versus-duty table for several loads. With `pinned_delay` set the
/// delay is held at that value instead of being solved with v_o.
inline std::vector<CurveRow> vo_vs_duty_curve(const ValidatedParams& p,
                                              const std::vector<double>& r_values,
                                              const std::vector<double>& d_grid,
                                              std::optional<double> pinned_delay = std::nullopt) {
    if (r_values.empty() || d_grid.empty()) throw NonPositiveParameter("grid size");
    std::vector<CurveRow> rows;
    rows.reserve(r_values.size() * d_grid.size());
    for (double r : r_values) {
        const ValidatedParams pr = with_conditions(p, r, p.i_ls_amp());
        for (double d : d_grid) {
            CurveRow row;
            row.r_load = r;
            row.duty = d;
            try {
                const OperatingPoint op = pinned_delay ? pinned_operating_point(pr, d, *pinned_delay)
                                                       : solve_operating_point(pr, d);
                row.v_o = op.v_o;
                row.t_f = op.t_f;
                row.phase_delay_norm = op.phase_delay_norm;
                row.regulable = op.regulable;
            } catch (const Error& e) {
                row.error = e.what();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace wpr
