#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

namespace wpr::numeric {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Bisection on a bracket [lo, hi] where f(lo) and f(hi) have opposite
/// signs (or one is zero). Stops when the bracket is narrower than `tol` or
/// when the midpoint can no longer split it in floating point.
template <class F>
double bisect(F&& f, double lo, double hi, double tol) {
    double f_lo = f(lo);
    if (f_lo == 0.0) return lo;
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = f(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// First point where `pred` flips from false to true inside [lo, hi],
/// given pred(lo) == false and pred(hi) == true. Refines to the last
/// representable split.
template <class Pred>
double bisect_first_true(Pred&& pred, double lo, double hi) {
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

/// Golden-section search for the maximiser of a unimodal f on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton
/// iteration on the Legendre polynomial.
template <std::size_t N>
struct GaussLegendre {
    std::array<double, N> x{};
    std::array<double, N> w{};

    GaussLegendre() {
        for (std::size_t i = 0; i < (N + 1) / 2; ++i) {
            double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                                (static_cast<double>(N) + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (std::size_t k = 1; k <= N; ++k) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / static_cast<double>(k);
                }
                dp = static_cast<double>(N) * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            x[i] = -z;
            x[N - 1 - i] = z;
            w[i] = w[N - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }
};

template <std::size_t N = 20, class F>
double integrate(F&& f, double a, double b) {
    static const GaussLegendre<N> rule;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) sum += rule.w[i] * f(mid + half * rule.x[i]);
    return sum * half;
}

/// (1 - exp(-a h)) / a, continuous at a = 0.
inline double exp_integral(double a, double h) {
    if (a == 0.0) return h;
    return -std::expm1(-a * h) / a;
}

}  // namespace wpr::numeric
