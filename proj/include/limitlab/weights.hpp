#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "limitlab/special.hpp"

namespace limitlab {

// A distance weight D(n), n >= 1, with the metadata the predictors need.
// rv_index is declared by the caller, never inferred.
struct WeightSequence {
    std::function<double(std::int64_t)> generator;
    std::int64_t n0 = 1;
    bool summable = false;
    std::optional<double> rv_index;
    std::string name;

    double operator()(std::int64_t n) const { return generator(n); }

    // f[j] = 1/D(j) for n0 <= j <= N and 0 otherwise (f has N+1 entries).
    std::vector<double> reciprocals(std::int64_t N) const {
        if (n0 < 1)
            throw std::invalid_argument("WeightSequence: gap n0 must be >= 1");
        std::vector<double> f(static_cast<std::size_t>(N + 1), 0.0);
        for (std::int64_t j = n0; j <= N; ++j) {
            const double d = generator(j);
            if (!(d > 0.0) || !std::isfinite(d))
                throw std::invalid_argument("WeightSequence " + name + ": D(" + std::to_string(j) +
                                            ") is not a positive finite number");
            f[static_cast<std::size_t>(j)] = 1.0 / d;
        }
        return f;
    }
};

namespace detail {
inline std::string num(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}
} // namespace detail

// D(n) = scale * n^p
inline WeightSequence weights_power(double p, double scale = 1.0, std::int64_t n0 = 1) {
    if (!(scale > 0.0))
        throw std::invalid_argument("weights_power: scale must be positive");
    WeightSequence w;
    w.generator = [p, scale](std::int64_t n) { return scale * std::pow(static_cast<double>(n), p); };
    w.n0 = n0;
    w.summable = p > 1.0;
    if (p >= 0.0 && p <= 1.0)
        w.rv_index = 1.0 - p;
    w.name = (scale == 1.0 ? "" : detail::num(scale) + "*") + "n^" + detail::num(p);
    return w;
}

// D(n) = (shift + n)^p
inline WeightSequence weights_shifted_power(double p, double shift = 1.0, std::int64_t n0 = 1) {
    WeightSequence w;
    w.generator = [p, shift](std::int64_t n) { return std::pow(shift + static_cast<double>(n), p); };
    w.n0 = n0;
    w.summable = p > 1.0;
    if (p >= 0.0 && p <= 1.0)
        w.rv_index = 1.0 - p;
    w.name = "(" + detail::num(shift) + "+n)^" + detail::num(p);
    return w;
}

// D(i) = lambda(m, s, i), the weights of U_n(k, m, n0, s).
inline WeightSequence weights_lambda(unsigned m, double s, std::int64_t n0) {
    if (!detail::iterated_log_positive(m, n0))
        throw std::domain_error("weights_lambda: n0 below the iterated-log threshold");
    WeightSequence w;
    w.generator = [m, s](std::int64_t i) { return lambda_weight(m, s, i); };
    w.n0 = n0;
    w.summable = s > 1.0;
    if (m == 0 && s >= 0.0 && s <= 1.0)
        w.rv_index = 1.0 - s;
    else if (m >= 1 && s <= 1.0)
        w.rv_index = 0.0;
    w.name = "lambda(" + std::to_string(m) + "," + detail::num(s) + ",i)";
    return w;
}

} // namespace limitlab
