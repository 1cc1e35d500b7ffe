#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "limitlab/kernel.hpp"
#include "limitlab/parallel.hpp"
#include "limitlab/special.hpp"
#include "limitlab/summation.hpp"
#include "limitlab/weights.hpp"

namespace limitlab {

struct MultiSumResult {
    std::int64_t n = 0;
    unsigned m = 0;
    double value = 0.0;
    bool constrained = false; // gap n0 > 1 was applied
};

namespace detail {

// next[n'] = sum_{j=n0}^{n'} f[j] * prev[n'-j], for n' = 0..N
inline std::vector<double> convolve_level(const std::vector<double>& f, const std::vector<double>& prev,
                                          std::int64_t n0, std::int64_t N) {
    std::vector<double> next(static_cast<std::size_t>(N + 1), 0.0);
    for (std::int64_t np = n0; np <= N; ++np) {
        CompensatedSum acc;
        for (std::int64_t j = n0; j <= np; ++j) {
            const double p = prev[static_cast<std::size_t>(np - j)];
            if (p != 0.0)
                acc.add(f[static_cast<std::size_t>(j)] * p);
        }
        next[static_cast<std::size_t>(np)] = acc.value();
    }
    return next;
}

inline double convolve_point(const std::vector<double>& f, const std::vector<double>& prev, std::int64_t n0,
                             std::int64_t n) {
    CompensatedSum acc;
    for (std::int64_t j = n0; j <= n; ++j) {
        const double p = prev[static_cast<std::size_t>(n - j)];
        if (p != 0.0)
            acc.add(f[static_cast<std::size_t>(j)] * p);
    }
    return acc.value();
}

} // namespace detail

// Phi(n', q) for all n' = 0..N and q = 0..m, by the level recursion
//   L_0 = 1,  L_q(n') = sum_{j=n0}^{n'} (1/D(j)) L_{q-1}(n'-j).
// This is the O(N^2 m) reference path.
inline std::vector<std::vector<double>> phi_table(const WeightSequence& w, std::int64_t N, unsigned m) {
    if (N < 0)
        throw std::invalid_argument("phi_table: negative horizon");
    const auto f = w.reciprocals(std::max<std::int64_t>(N, 0));
    std::vector<std::vector<double>> L;
    L.reserve(m + 1);
    L.emplace_back(static_cast<std::size_t>(N + 1), 1.0);
    for (unsigned q = 1; q <= m; ++q)
        L.push_back(detail::convolve_level(f, L.back(), w.n0, N));
    return L;
}

// Phi(n, m) at a single horizon. Level 1 is a prefix sum and the last level
// is a single dot product, so m <= 2 costs O(n).
inline MultiSumResult phi(const WeightSequence& w, std::int64_t n, unsigned m) {
    if (m < 1 || n < 1)
        throw std::invalid_argument("phi: need n >= 1 and m >= 1");
    MultiSumResult r{n, m, 0.0, w.n0 > 1};
    if (n < static_cast<std::int64_t>(m) * w.n0)
        return r;
    const auto f = w.reciprocals(n);
    std::vector<double> level(static_cast<std::size_t>(n + 1), 0.0);
    {
        CompensatedSum acc;
        for (std::int64_t j = 0; j <= n; ++j) {
            acc.add(f[static_cast<std::size_t>(j)]);
            level[static_cast<std::size_t>(j)] = acc.value();
        }
    }
    if (m == 1) {
        r.value = level[static_cast<std::size_t>(n)];
        return r;
    }
    const std::int64_t inner = n - w.n0;
    for (unsigned q = 2; q < m; ++q)
        level = detail::convolve_level(f, level, w.n0, inner);
    r.value = detail::convolve_point(f, level, w.n0, n);
    return r;
}

// U_n(k, m, n0, s): Phi with weights lambda(m, s, .)
inline MultiSumResult u_sum(unsigned k, unsigned m, std::int64_t n0, double s, std::int64_t n) {
    if (!detail::iterated_log_positive(m, n0))
        throw std::domain_error("u_sum: n0 below the iterated-log threshold");
    auto r = phi(weights_lambda(m, s, n0), n, k);
    r.constrained = n0 > 1;
    return r;
}

// Cumulative Psi_{n'}(q) = sum_{j <= n'} T(j, q) for n' = 0..N, q = 0..m, with
//   T(j,1) = r(0,j),  T(j,q) = sum_{i<j} T(i,q-1) r(i,j).
// Row 0 is left as zeros.
struct PsiTable {
    std::int64_t N = 0;
    unsigned m = 0;
    std::vector<std::vector<double>> cumulative;

    double operator()(std::int64_t n, unsigned q) const {
        return cumulative.at(q).at(static_cast<std::size_t>(n));
    }
};

inline PsiTable psi_table(const RhoKernel& kernel, std::int64_t N, unsigned m, unsigned threads = 0) {
    if (N < 0)
        throw std::invalid_argument("psi_table: negative horizon");
    if (threads == 0)
        threads = default_thread_count();
    PsiTable out;
    out.N = N;
    out.m = m;
    out.cumulative.assign(m + 1, std::vector<double>(static_cast<std::size_t>(N + 1), 0.0));
    if (m == 0 || N == 0)
        return out;

    std::vector<double> prev = kernel.marginals(N);
    auto accumulate = [&](unsigned q, const std::vector<double>& T) {
        CompensatedSum acc;
        for (std::int64_t j = 1; j <= N; ++j) {
            acc.add(T[static_cast<std::size_t>(j)]);
            out.cumulative[q][static_cast<std::size_t>(j)] = acc.value();
        }
    };
    accumulate(1, prev);
    if (m == 1)
        return out;

    const auto cols = kernel.columns(N);
    for (unsigned q = 2; q <= m; ++q) {
        std::vector<double> T(static_cast<std::size_t>(N + 1), 0.0);
        const std::int64_t first = q;
        const unsigned workers =
            static_cast<unsigned>(std::clamp<std::int64_t>(threads, 1, std::max<std::int64_t>(1, N - first + 1)));
        // cyclic assignment of columns evens out the O(j) cost per column
        parallel_for(0, workers, workers, [&](std::int64_t wlo, std::int64_t whi) {
            std::vector<double> r(static_cast<std::size_t>(N + 1));
            for (std::int64_t w = wlo; w < whi; ++w) {
                for (std::int64_t j = first + w; j <= N; j += workers) {
                    cols->fill(j, r.data());
                    CompensatedSum acc;
                    for (std::int64_t i = q - 1; i < j; ++i)
                        acc.add(prev[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)]);
                    T[static_cast<std::size_t>(j)] = acc.value();
                }
            }
        });
        accumulate(q, T);
        prev = std::move(T);
    }
    return out;
}

inline double psi_general(const RhoKernel& kernel, std::int64_t n, unsigned m) {
    if (n < 1 || m < 1)
        throw std::invalid_argument("psi_general: need n >= 1 and m >= 1");
    if (static_cast<std::int64_t>(m) > n)
        return 0.0;
    return psi_table(kernel, n, m)(n, m);
}

// ---------------------------------------------------------------------------
// Asymptotic predictions

enum class ScalingKind {
    constant,          // 1
    partial_sum_power, // S(n)^e
    log_power,         // (log n)^e
    n_power,           // n^e
    iterated_log_power // (log_depth n)^e
};

struct Scaling {
    ScalingKind kind = ScalingKind::constant;
    double exponent = 0.0;
    unsigned depth = 0;

    double operator()(double n, double S = std::numeric_limits<double>::quiet_NaN()) const {
        switch (kind) {
        case ScalingKind::constant:
            return 1.0;
        case ScalingKind::partial_sum_power:
            if (std::isnan(S))
                throw std::invalid_argument("Scaling: S(n) required for S(n)^e scaling");
            return std::pow(S, exponent);
        case ScalingKind::log_power:
            return std::pow(std::log(n), exponent);
        case ScalingKind::n_power:
            return std::pow(n, exponent);
        case ScalingKind::iterated_log_power:
            return std::pow(iterated_log(depth, n), exponent);
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    std::string describe() const {
        const std::string e = detail::num(exponent);
        switch (kind) {
        case ScalingKind::constant:
            return "constant";
        case ScalingKind::partial_sum_power:
            return "S(n)^" + e;
        case ScalingKind::log_power:
            return "(log n)^" + e;
        case ScalingKind::n_power:
            return "n^" + e;
        case ScalingKind::iterated_log_power:
            return "(log_" + std::to_string(depth) + " n)^" + e;
        }
        return "?";
    }
};

struct AsymptoticPrediction {
    std::string regime;
    Scaling scaling;
    double coefficient = 0.0;

    double predicted(double n, double S = std::numeric_limits<double>::quiet_NaN()) const {
        return coefficient * scaling(n, S);
    }
};

namespace regime {
struct Summable {
    double zeta; // sum of reciprocal weights from n0 on
};
struct RegularlyVarying {
    double tau;
};
// multiple sums with the power kernel weights; coefficient per k-fold sum
struct Power {
    double alpha;
    double beta = 1.0;
};
// k-th moment of the success count under the power kernel
struct PowerMoment {
    double alpha;
    double beta = 1.0;
};
// U_n(k, m, n0, sigma) for real sigma; the case is chosen from (m, sigma)
struct IteratedLog {
    unsigned m;
    double sigma;
    std::int64_t n0;
    double tol = 1e-10;
};
} // namespace regime

using Regime = std::variant<regime::Summable, regime::RegularlyVarying, regime::Power, regime::PowerMoment,
                            regime::IteratedLog>;

inline AsymptoticPrediction predict(const Regime& reg, unsigned k) {
    if (k < 1)
        throw std::invalid_argument("predict: order must be >= 1");
    const double kd = static_cast<double>(k);
    return std::visit(
        [&](const auto& r) -> AsymptoticPrediction {
            using R = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<R, regime::Summable>) {
                if (!(r.zeta > 0.0) || !std::isfinite(r.zeta))
                    throw std::invalid_argument("predict: summable regime needs a finite positive zeta");
                return {"summable", {ScalingKind::constant, 0.0, 0}, std::pow(r.zeta, kd)};
            } else if constexpr (std::is_same_v<R, regime::RegularlyVarying>) {
                return {"regularly-varying", {ScalingKind::partial_sum_power, kd, 0},
                        std::pow(lambda_sigma(r.tau), -(kd - 1.0))};
            } else if constexpr (std::is_same_v<R, regime::Power>) {
                if (!(r.alpha > 0.0) || !(r.beta > 0.0))
                    throw std::invalid_argument("predict: power regime needs alpha, beta > 0");
                const double c = gamma_moment(r.alpha, k) / std::tgamma(kd + 1.0) /
                                 std::pow(r.alpha * r.beta, kd);
                return {"power", {ScalingKind::log_power, kd, 0}, c};
            } else if constexpr (std::is_same_v<R, regime::PowerMoment>) {
                if (!(r.alpha > 0.0) || !(r.beta > 0.0))
                    throw std::invalid_argument("predict: power regime needs alpha, beta > 0");
                return {"power-moment", {ScalingKind::log_power, kd, 0},
                        gamma_moment(r.alpha, k) / std::pow(r.alpha * r.beta, kd)};
            } else {
                const double s = r.sigma;
                if (s > 1.0) {
                    const auto z = zeta_tail(r.m, s, r.n0, r.tol);
                    return {"convergent", {ScalingKind::constant, 0.0, 0}, std::pow(z.value, kd)};
                }
                if (s == 1.0)
                    return {"critical", {ScalingKind::iterated_log_power, kd, r.m + 1}, 1.0};
                if (!(s >= 0.0))
                    throw std::domain_error("predict: unsupported regime (sigma < 0)");
                if (r.m >= 1)
                    return {"iterated-log", {ScalingKind::iterated_log_power, kd * (1.0 - s), r.m},
                            std::pow(1.0 - s, -kd)};
                const double g = std::tgamma(2.0 - s) * std::tgamma(1.0 - s) / std::tgamma(3.0 - 2.0 * s);
                return {"polynomial", {ScalingKind::n_power, kd * (1.0 - s), 0},
                        std::pow(g, kd - 1.0) / (1.0 - s)};
            }
        },
        reg);
}

} // namespace limitlab
