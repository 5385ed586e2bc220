#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "oracles.hpp"
#include "wpr/averaged.hpp"
#include "wpr/small_signal.hpp"

using Catch::Approx;
using namespace wpr;

namespace {

const ValidatedParams& fig7() {
    static const ValidatedParams p = validate(fig7_params());
    return p;
}

OperatingPoint fig7_op() { return pinned_operating_point(fig7(), 0.5, 0.1); }

}  // namespace

TEST_CASE("plant at the small-signal design conditions", "[small_signal]") {
    const auto tf = plant_tf(fig7(), fig7_op());
    CHECK(tf.dc_gain == Approx(-17.63).margin(0.01));
    CHECK(20 * std::log10(std::abs(tf.dc_gain)) == Approx(24.93).margin(0.01));
    CHECK(tf.pole_hz == Approx(53.05).margin(0.01));
    CHECK_THROWS_AS(plant_tf(fig7(), pinned_operating_point(fig7(), optimal_duty(0.1), 0.1)),
                    ZeroGainOperatingPoint);
}

TEST_CASE("plant Bode shape", "[small_signal]") {
    const auto tf = plant_tf(fig7(), fig7_op());
    const auto pts = bode(tf, {1e-3, tf.pole_hz, 1e6});
    CHECK(pts[0].phase_deg == Approx(-180.0).margin(0.01));
    CHECK(pts[1].mag_db == Approx(20 * std::log10(17.63) - 3.0103).margin(0.01));
    CHECK(pts[2].phase_deg == Approx(-270.0).margin(0.01));

    const auto grid = log_grid(1.0, 1e5, 40);
    for (const auto& b : bode(tf, grid))
        CHECK(b.phase_deg ==
              Approx(-180.0 - std::atan(b.f_hz / tf.pole_hz) * 180.0 / std::numbers::pi).margin(1e-9));

    // 0 dB crossing of the bare plant
    const auto f0 = oracle::first_root(
        [&](double f) { return std::abs(tf.at(f)) - 1.0; }, 100.0, 5000.0);
    REQUIRE(f0);
    CHECK(*f0 == Approx(934.0).margin(2.0));

    TransferFunction1P integ = tf;
    integ.integrator_count = 1;
    const auto lo = bode(integ, {1e-4, 1e-3});
    CHECK(lo[0].mag_db - lo[1].mag_db == Approx(20.0).margin(1e-3));
}

TEST_CASE("PI design", "[small_signal]") {
    const auto g = design_pi(fig7(), fig7_op(), 1000.0);
    CHECK(g.k_p == Approx(-1.07).margin(0.01));
    CHECK(g.k_i == Approx(-356.0).margin(3.0));
    CHECK(g.d_min == Approx(0.4));
    CHECK(g.d_max == Approx(0.8));
    const auto g2 = design_pi(fig7(), fig7_op(), 2000.0);
    CHECK(g2.k_p == Approx(2 * g.k_p).epsilon(1e-12));
    CHECK(g2.k_i == Approx(2 * g.k_i).epsilon(1e-12));
    const auto gp = design_pi(fig7(), pinned_operating_point(fig7(), 0.35, 0.1), 1000.0);
    CHECK(gp.k_p > 0.0);
    CHECK(gp.k_i > 0.0);
}

TEST_CASE("loop margins of the reference design", "[small_signal]") {
    const auto tf = plant_tf(fig7(), fig7_op());
    const auto m = loop_margins(tf, design_pi(fig7(), fig7_op(), 1000.0));
    CHECK(m.crossover_hz == Approx(1000.0).epsilon(1e-9));
    CHECK(m.phase_margin_deg == Approx(90.0).margin(1e-9));
    CHECK(m.gain_at_10hz_db >= 40.0 - 1e-9);
    CHECK_THROWS_AS(loop_margins(tf, PiGains{0.0, 0.0, 0.4, 0.8}), NoCrossover);
}

TEST_CASE("pole-zero cancellation gives 90 degrees for every valid design point",
          "[small_signal][property]") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int n = 0;
    while (n < 300) {
        const ValidatedParams p = with_conditions(fig7(), 5 + 100 * u(rng), 0.3 + 3 * u(rng));
        const double pd = 0.2 * u(rng);
        const auto b = duty_bounds(pd);
        const double d = b.d_min + (b.d_max - b.d_min) * u(rng);
        const OperatingPoint op = pinned_operating_point(p, d, pd);
        if (std::abs(std::sin(oracle::two_pi * (d + pd))) < 1e-3) continue;
        ++n;
        const double fc = 100 + 5000 * u(rng);
        const auto g = design_pi(p, op, fc);
        const auto tf = plant_tf(p, op);
        CHECK(g.k_p * g.k_i > 0.0);
        CHECK(g.k_p * tf.dc_gain > 0.0);  // negative feedback with e = v_ref - v_o
        const auto m = loop_margins(tf, g);
        CHECK(m.phase_margin_deg == Approx(90.0).margin(1e-6));
        CHECK(m.crossover_hz == Approx(fc).epsilon(1e-9));
        // regulable branch: both gains negative
        if (d > optimal_duty(pd) + 1e-3) CHECK(g.k_p < 0.0);
    }
}

TEST_CASE("plant gain matches a finite difference of the averaged model",
          "[small_signal][property]") {
    const auto& p = fig7();
    for (double d : {0.42, 0.5, 0.6, 0.7}) {
        for (double pd : {0.05, 0.1}) {
            const double fd = oracle::central_diff(
                [&](double x) { return averaged_rhs(5.0, x, pd, p); }, d, 1e-6);
            const double coeff = p.i_ls_amp() * std::sin(oracle::two_pi * (d + pd)) / p.c_o();
            CHECK(fd == Approx(coeff).epsilon(1e-6));
            const auto tf = plant_tf(p, pinned_operating_point(p, d, pd));
            CHECK(tf.dc_gain / (p.r_load() * p.c_o()) == Approx(coeff).epsilon(1e-12));
        }
    }
}

TEST_CASE("perturbation oracle agrees with the analytic plant", "[small_signal]") {
    const auto grid = log_grid(10.0, 10e3, 30);
    REQUIRE(grid.size() == 91);
    const auto tf = plant_tf(fig7(), fig7_op());
    const auto a = bode(tf, grid);
    const auto o = perturb_bode_oracle(fig7(), fig7_op(), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::abs(a[i].mag_db - o[i].mag_db) <= 0.5);
        CHECK(std::abs(a[i].phase_deg - o[i].phase_deg) <= 3.0);
    }

    const auto dc = perturb_bode_oracle(fig7(), fig7_op(), {1.0});
    CHECK(std::pow(10.0, dc[0].mag_db / 20) == Approx(std::abs(tf.dc_gain)).epsilon(0.01));

    PerturbationOptions big;
    big.relative_amplitude = 2e-3;
    const auto x1 = perturb_bode_oracle(fig7(), fig7_op(), {100.0, 1000.0});
    const auto x2 = perturb_bode_oracle(fig7(), fig7_op(), {100.0, 1000.0}, big);
    for (int i = 0; i < 2; ++i) {
        const double r = std::pow(10.0, (x2[i].mag_db - x1[i].mag_db) / 20);
        CHECK(std::abs(r - 1.0) < 1e-3);
    }
}

TEST_CASE("closed loop of the reference design is first order", "[small_signal]") {
    const auto tf = plant_tf(fig7(), fig7_op());
    const LoopTf loop{tf, design_pi(fig7(), fig7_op(), 1000.0)};
    for (const auto& b : closed_loop_bode(loop, {100.0, 1000.0, 5000.0})) {
        const std::complex<double> t = 1.0 / (1.0 + std::complex<double>(0.0, b.f_hz / 1000.0));
        CHECK(b.mag_db == Approx(20 * std::log10(std::abs(t))).margin(1e-9));
        CHECK(b.phase_deg == Approx(std::arg(t) * 180 / std::numbers::pi).margin(1e-9));
    }
}

TEST_CASE("log grid", "[small_signal]") {
    const auto g = log_grid(10.0, 10e3, 30);
    CHECK(g.front() == 10.0);
    CHECK(g.back() == Approx(10e3).epsilon(1e-12));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == Approx(std::pow(10.0, 1.0 / 30)));
    CHECK_THROWS_AS(log_grid(0.0, 10.0, 10), NonPositiveParameter);
}
