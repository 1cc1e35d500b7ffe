#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "limitlab/kernel.hpp"
#include "limitlab/multisum.hpp"
#include "limitlab/summation.hpp"

namespace limitlab {

using u128 = unsigned __int128;

// c(k, m) = number of surjections from a k-set onto an m-set, for 0 <= m <= k <= K.
inline std::vector<std::vector<u128>> surjection_table(unsigned K) {
    if (K > 20)
        throw std::overflow_error("surjection_table: orders above 20 are not supported");
    std::vector<std::vector<u128>> c(K + 1, std::vector<u128>(K + 1, 0));
    c[0][0] = 1;
    for (unsigned k = 1; k <= K; ++k)
        for (unsigned m = 1; m <= k; ++m)
            c[k][m] = static_cast<u128>(m) * (c[k - 1][m - 1] + c[k - 1][m]);
    return c;
}

inline u128 surjections(unsigned k, unsigned m) {
    if (m > k)
        return 0;
    return surjection_table(k)[k][m];
}

// E(sum_{j<=n} eta_j)^k = sum_m c(k,m) Psi_n(m), read from a prebuilt Psi table.
inline double moment_from_psi(const PsiTable& psi, std::int64_t n, unsigned k) {
    if (k > psi.m)
        throw std::invalid_argument("moment_from_psi: Psi table too shallow");
    const auto c = surjection_table(k);
    CompensatedSum acc;
    for (unsigned m = 1; m <= k; ++m)
        acc.add(static_cast<double>(c[k][m]) * psi(n, m));
    return acc.value();
}

inline double count_moment(const RhoKernel& kernel, std::int64_t n, unsigned k) {
    if (n < 1 || k < 1)
        throw std::invalid_argument("count_moment: need n >= 1 and k >= 1");
    if (k > 20)
        throw std::overflow_error("count_moment: orders above 20 are not supported");
    const unsigned depth = static_cast<unsigned>(std::min<std::int64_t>(k, n));
    const auto psi = psi_table(kernel, n, depth);
    const auto c = surjection_table(k);
    CompensatedSum acc;
    for (unsigned m = 1; m <= depth; ++m)
        acc.add(static_cast<double>(c[k][m]) * psi(n, m));
    return acc.value();
}

struct MomentTable {
    std::vector<std::int64_t> horizons;
    unsigned K = 0;
    std::vector<std::vector<double>> values; // values[h][k-1]

    double at(std::size_t h, unsigned k) const { return values.at(h).at(k - 1); }
};

inline void check_horizons(const std::vector<std::int64_t>& horizons) {
    if (horizons.empty())
        throw std::invalid_argument("horizons must be nonempty");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (horizons[i] < 1 || (i > 0 && horizons[i] <= horizons[i - 1]))
            throw std::invalid_argument("horizons must be positive and strictly increasing");
    }
}

inline MomentTable moment_table(const RhoKernel& kernel, const std::vector<std::int64_t>& horizons, unsigned K) {
    check_horizons(horizons);
    if (K < 1)
        throw std::invalid_argument("moment_table: K must be >= 1");
    if (K > 20)
        throw std::overflow_error("moment_table: orders above 20 are not supported");
    const auto psi = psi_table(kernel, horizons.back(), K);
    const auto c = surjection_table(K);
    MomentTable t{horizons, K, {}};
    for (auto n : horizons) {
        std::vector<double> row;
        for (unsigned k = 1; k <= K; ++k) {
            CompensatedSum acc;
            for (unsigned m = 1; m <= k; ++m)
                acc.add(static_cast<double>(c[k][m]) * psi(n, m));
            row.push_back(acc.value());
        }
        t.values.push_back(std::move(row));
    }
    return t;
}

// Moments 0..K of Geometric(1/(zeta+1)) on {0,1,...} (mean zeta), from
//   E xi^k = zeta * (E (xi+1)^k - E xi^k),
// i.e. mu_k = zeta * sum_{j<k} C(k,j) mu_j.
inline std::vector<double> geo_limit_moments(double zeta, unsigned K) {
    if (!(zeta > 0.0))
        throw std::domain_error("geo_limit_moments: zeta must be positive");
    std::vector<double> mu(K + 1, 0.0);
    mu[0] = 1.0;
    for (unsigned k = 1; k <= K; ++k) {
        double binom = 1.0;
        CompensatedSum acc;
        for (unsigned j = 0; j < k; ++j) {
            acc.add(binom * mu[j]);
            binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
        }
        mu[k] = zeta * acc.value();
    }
    return mu;
}

// (n, E(sum eta)^k / scaler(n)^k) for each horizon
inline std::vector<std::pair<std::int64_t, double>> scaled_moment_curve(
    const RhoKernel& kernel, unsigned k, const std::vector<std::int64_t>& horizons,
    const std::function<double(std::int64_t)>& scaler) {
    const auto t = moment_table(kernel, horizons, k);
    std::vector<std::pair<std::int64_t, double>> out;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        const double s = scaler(horizons[h]);
        out.emplace_back(horizons[h], t.at(h, k) / std::pow(s, static_cast<double>(k)));
    }
    return out;
}

} // namespace limitlab
