#pragma once

#include <cmath>

#include "kgmix/errors.hpp"

namespace kgmix {

namespace detail {

// Continued-fraction kernel for the regularized incomplete beta (modified
// Lentz). Converges quickly for x < (a+1)/(a+b+2); callers use the symmetry
// I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
inline double beta_cont_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw ComputeError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("incomplete_beta: a, b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("incomplete_beta: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cont_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_cont_fraction(b, a, 1.0 - x) / b;
}

// Two-sided p-value of a Student-t statistic with df degrees of freedom:
// p = I_{df/(df+t^2)}(df/2, 1/2).
inline double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw ConfigError("student_t_two_sided_p: df must be positive");
    if (std::isinf(t)) return 0.0;
    if (!std::isfinite(t)) throw ConfigError("student_t_two_sided_p: t must not be NaN");
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

}  // namespace kgmix
