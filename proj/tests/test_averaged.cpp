#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "wpr/averaged.hpp"

using Catch::Approx;
using namespace wpr;

namespace {

const ValidatedParams& proto() {
    static const ValidatedParams p = validate(table2_params());
    return p;
}

}  // namespace

TEST_CASE("averaged right-hand side", "[averaged]") {
    const auto& p = proto();
    const double vss = steady_state_vo(2.35, 38.09, 0.532, 0.0672);
    CHECK(averaged_rhs(vss, 0.532, 0.0672, p) == Approx(0.0).margin(1e-9));
    CHECK(averaged_rhs(0.0, 0.5, 0.0, p) ==
          Approx(2.35 / (std::numbers::pi * p.c_o())).epsilon(1e-12));
    CHECK(averaged_rhs(20.0, 0.532, 0.0672, p) ==
          Approx((vss - 20.0) / (38.09 * p.c_o())).epsilon(1e-9));
}

TEST_CASE("steady state is a fixed point for every duty and delay", "[averaged][property]") {
    const auto& p = proto();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.05, 0.95), pd(0.0, 0.2);
    for (int i = 0; i < 300; ++i) {
        const double x = d(rng), y = pd(rng);
        const double v = steady_state_vo(2.35, 38.09, x, y);
        CHECK(std::abs(averaged_rhs(v, x, y, p)) <= 1e-12 * std::max(1.0, std::abs(v)) / (38.09 * p.c_o()));
    }
}

TEST_CASE("integration at the fixed point stays flat", "[averaged]") {
    const auto& p = proto();
    const double vss = steady_state_vo(2.35, 38.09, 0.532, 0.0672);
    const auto tr = integrate_averaged({vss, 0.0}, DutySchedule::constant({0.532, 0.0672}), 10e-3, p,
                                       1e-4);
    double worst = 0.0;
    for (const auto& s : tr.samples) worst = std::max(worst, std::abs(s.v_o - vss));
    CHECK(worst < 1e-9);
    CHECK(tr.samples.back().t == Approx(10e-3));
}

TEST_CASE("duty step relaxes with the RC time constant", "[averaged]") {
    const auto& p = proto();
    const double tau = 38.09 * p.c_o();
    const auto sched = DutySchedule::piecewise({{0.0, {0.55, 0.0672}}, {0.01, {0.6, 0.0672}}});
    const double v0 = steady_state_vo(2.35, 38.09, 0.55, 0.0672);
    const double v1 = steady_state_vo(2.35, 38.09, 0.6, 0.0672);
    const auto tr = integrate_averaged({v0, 0.0}, sched, 0.2, p, 1e-3);
    // log-linear fit of the decaying part
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& s : tr.samples) {
        if (s.t <= 0.01 + 1e-12) continue;
        const double e = std::abs(s.v_o - v1);
        if (e < 1e-6) continue;
        const double x = s.t - 0.01, y = std::log(e);
        sx += x; sy += y; sxx += x * x; sxy += x * y; ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(-1.0 / slope == Approx(tau).epsilon(1e-3));
}

TEST_CASE("zero source gives pure RC decay", "[averaged]") {
    const ValidatedParams p = with_conditions(proto(), 38.09, 0.0);
    const auto tr = integrate_averaged({24.0, 0.0}, DutySchedule::constant({0.6, 0.0}), 0.05, p, 1e-3);
    const double tau = 38.09 * p.c_o();
    for (const auto& s : tr.samples) CHECK(s.v_o == Approx(24.0 * std::exp(-s.t / tau)).epsilon(1e-12));
}

TEST_CASE("exact segments agree with an RK4 reference on random schedules",
          "[averaged][property]") {
    const auto& p = proto();
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(0.45, 0.85), dt(1e-3, 1e-2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<DutySchedule::Piece> pieces;
        double t = 0.0;
        for (int k = 0; k < 6; ++k) {
            pieces.push_back({t, {d(rng), 0.0672}});
            t += dt(rng);
        }
        const auto sched = DutySchedule::piecewise(pieces);
        const double horizon = t;
        const auto tr = integrate_averaged({5.0, 0.0}, sched, horizon, p, horizon);
        // RK4 piece by piece with the same breakpoints
        double v = 5.0;
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            const double a = k == 0 ? 0.0 : pieces[k].t_start;
            const double b = k + 1 < pieces.size() ? pieces[k + 1].t_start : horizon;
            const auto c = pieces[k].cmd;
            v = oracle::rk4([&](double, double y) { return averaged_rhs(y, c.duty, c.phase_delay_norm, p); },
                            a, v, b, 4000);
        }
        CHECK(tr.samples.back().v_o == Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("feedforward and self-consistent delay modes", "[averaged]") {
    const auto& p = proto();
    auto ff = DutySchedule::constant({0.532, 0.0}, DelayMode::feedforward);
    ff.v_ref = 24.0;
    const auto a = integrate_averaged({0.0, 0.0}, ff, 0.4, p, 0.4);
    const double pd_ff = p.f_s() * fall_time_approx(p, 24.0);
    CHECK(a.samples.back().v_o == Approx(steady_state_vo(2.35, 38.09, 0.532, pd_ff)).epsilon(1e-3));

    const auto sc = DutySchedule::constant({0.532, 0.0}, DelayMode::self_consistent);
    const auto b = integrate_averaged({0.0, 0.0}, sc, 0.4, p, 0.4);
    CHECK(b.samples.back().v_o == Approx(solve_operating_point(p, 0.532).v_o).epsilon(1e-3));
}

TEST_CASE("output-versus-duty curves", "[averaged]") {
    const auto& p = proto();
    std::vector<double> grid;
    for (int i = 0; i <= 300; ++i) grid.push_back(0.3 + 0.002 * i);
    const auto rows = vo_vs_duty_curve(p, {10.0, 20.0, 30.0, 38.09}, grid);
    REQUIRE(rows.size() == 4 * grid.size());
    for (double r : {10.0, 20.0, 30.0, 38.09}) {
        double best = -1.0, best_d = 0.0, pd_at_best = 0.0;
        for (const auto& row : rows) {
            if (row.r_load != r || row.error) continue;
            CHECK(row.v_o == Approx(std::max(0.0, steady_state_vo(2.35, r, row.duty, row.phase_delay_norm)))
                                 .margin(1e-12));
            if (row.v_o > best) {
                best = row.v_o;
                best_d = row.duty;
                pd_at_best = row.phase_delay_norm;
            }
        }
        CHECK(best_d == Approx(optimal_duty(pd_at_best)).margin(0.002 + 1e-9));
    }

    // pinned delay: exactly linear in R; coupled delay: sub-linear
    const auto pinned = vo_vs_duty_curve(p, {19.045, 38.09}, {0.6}, 0.0672);
    CHECK(pinned[1].v_o == Approx(2.0 * pinned[0].v_o).epsilon(1e-12));
    const auto coupled = vo_vs_duty_curve(p, {19.045, 38.09}, {0.6});
    CHECK(coupled[1].v_o < 2.0 * coupled[0].v_o);

    CHECK_THROWS_AS(vo_vs_duty_curve(p, {}, grid), NonPositiveParameter);
}
