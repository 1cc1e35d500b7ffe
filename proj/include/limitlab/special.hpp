#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "limitlab/summation.hpp"

namespace limitlab {

// Thrown when a series is asked for outside its region of convergence.
class nonconvergent_series : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct TailSum {
    double value = 0.0;
    double truncation_bound = 0.0;
};

inline double gamma_fn(double x) {
    if (!(x > 0.0))
        throw std::domain_error("gamma_fn: argument must be positive");
    return std::tgamma(x);
}

// Gamma(1+2s) / Gamma(1+s)^2, with the value 1 at s = 0.
inline double lambda_sigma(double sigma) {
    if (!(sigma >= 0.0 && sigma <= 1.0))
        throw std::domain_error("lambda_sigma: sigma must lie in [0,1]");
    if (sigma == 0.0)
        return 1.0;
    const double g = std::tgamma(1.0 + sigma);
    return std::tgamma(1.0 + 2.0 * sigma) / (g * g);
}

// log applied m times; log_0 x = x.
inline double iterated_log(unsigned m, double x) {
    for (unsigned j = 0; j < m; ++j)
        x = std::log(x);
    return x;
}

// Smallest positive integer n with log_m n > 0. Only m <= 4 fits in 64 bits.
inline std::int64_t script_O(unsigned m) {
    double x = 0.0;
    for (unsigned j = 0; j < m; ++j) {
        x = std::exp(x);
        if (x > 9.0e15)
            throw std::overflow_error("script_O: threshold exceeds integer range for m = " +
                                      std::to_string(m));
    }
    return static_cast<std::int64_t>(std::floor(x)) + 1;
}

namespace detail {

inline bool iterated_log_positive(unsigned m, std::int64_t i) {
    if (m >= 5)
        return false;
    return i >= script_O(m);
}

// (log_m x)^s * prod_{j<m} log_j x for real x past the threshold.
inline double lambda_real(unsigned m, double s, double x) {
    double prod = 1.0;
    double v = x;
    for (unsigned j = 0; j < m; ++j) {
        prod *= v;
        v = std::log(v);
    }
    return std::pow(v, s) * prod;
}

// |d/dx 1/lambda(m,s,x)|
inline double lambda_recip_slope(unsigned m, double s, double x) {
    double logs_slope = 0.0;
    double v = x;
    double dv = 1.0; // derivative of log_j x
    for (unsigned j = 0; j < m; ++j) {
        logs_slope += dv / v;
        dv = dv / v;
        v = std::log(v);
    }
    logs_slope += s * dv / v;
    return logs_slope / lambda_real(m, s, x);
}

} // namespace detail

inline double lambda_weight(unsigned m, double s, std::int64_t i) {
    if (!detail::iterated_log_positive(m, i))
        throw std::domain_error("lambda_weight: index below the iterated-log threshold");
    return detail::lambda_real(m, s, static_cast<double>(i));
}

// zeta(m,s) restricted to i >= n0, i.e. sum_{i>=n0} 1/lambda(m,s,i).
//
// The summand is convex and decreasing, so past a cut N the tail lies between
// I + f(N)/2 and I + f(N)/2 + |f'(N)|/8 with I the integral from N to infinity;
// the midpoint is reported.
inline TailSum zeta_tail(unsigned m, double s, std::int64_t n0, double tol = 1e-10) {
    if (!(s > 1.0))
        throw nonconvergent_series("zeta_tail: series diverges for s <= 1");
    if (!detail::iterated_log_positive(m, n0))
        throw std::domain_error("zeta_tail: n0 below the iterated-log threshold");
    if (!(tol > 0.0))
        throw std::invalid_argument("zeta_tail: tolerance must be positive");

    const double target = 0.5 * tol;
    auto slack = [&](std::int64_t n) {
        return detail::lambda_recip_slope(m, s, static_cast<double>(n)) / 16.0;
    };

    constexpr std::int64_t max_terms = 1'000'000'000;
    std::int64_t cut = n0;
    if (slack(cut) > target) {
        std::int64_t lo = cut;
        std::int64_t hi = cut;
        while (slack(hi) > target) {
            lo = hi;
            hi = hi * 2;
            if (hi - n0 > max_terms)
                throw std::runtime_error("zeta_tail: term budget exceeded");
        }
        while (hi - lo > 1) {
            const std::int64_t mid = lo + (hi - lo) / 2;
            if (slack(mid) > target)
                lo = mid;
            else
                hi = mid;
        }
        cut = hi;
    }

    CompensatedSum acc;
    for (std::int64_t i = n0; i < cut; ++i)
        acc.add(1.0 / detail::lambda_real(m, s, static_cast<double>(i)));
    const double x = static_cast<double>(cut);
    const double integral = std::pow(iterated_log(m, x), 1.0 - s) / (s - 1.0);
    const double d = slack(cut);
    acc.add(integral);
    acc.add(0.5 / detail::lambda_real(m, s, x));
    acc.add(d);

    TailSum out;
    out.value = acc.value();
    out.truncation_bound = d + 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(out.value);
    return out;
}

// E xi^k for xi ~ Gamma(alpha, 1): the rising factorial alpha (alpha+1) ... (alpha+k-1).
template <class T>
T gamma_moment(const T& alpha, unsigned k) {
    if (!(alpha > T(0)))
        throw std::domain_error("gamma_moment: alpha must be positive");
    T r(1);
    for (unsigned j = 0; j < k; ++j)
        r *= (T(static_cast<int>(j)) + alpha);
    return r;
}

} // namespace limitlab
