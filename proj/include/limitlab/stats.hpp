#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "limitlab/moments.hpp"
#include "limitlab/simulate.hpp"
#include "limitlab/special.hpp"
#include "limitlab/summation.hpp"

namespace limitlab {

class degenerate_sample : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Regularized lower incomplete gamma P(a, x): series below x = a + 1,
// Lentz continued fraction for Q = 1 - P above.
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0))
        throw std::domain_error("regularized_gamma_p: a must be positive");
    if (std::isnan(x))
        return x;
    if (x <= 0.0)
        return 0.0;
    if (std::isinf(x))
        return 1.0;
    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    constexpr double eps = 1e-16;
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term, ap = a;
        for (int n = 0; n < 100000; ++n) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * eps)
                break;
        }
        return std::min(1.0, sum * std::exp(log_prefix));
    }
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps)
            break;
    }
    return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

class LimitLaw {
public:
    enum class Kind { geometric, exponential, gamma };

    // P(i) = (1-p)^i p on {0, 1, ...}
    static LimitLaw geometric(double p) {
        if (!(p > 0.0 && p < 1.0))
            throw std::domain_error("LimitLaw::geometric: p must lie in (0,1)");
        return LimitLaw(Kind::geometric, p);
    }
    // the geometric law with mean zeta
    static LimitLaw geometric_mean(double zeta) {
        if (!(zeta > 0.0))
            throw std::domain_error("LimitLaw::geometric_mean: mean must be positive");
        return LimitLaw(Kind::geometric, 1.0 / (zeta + 1.0));
    }
    static LimitLaw exponential(double rate) {
        if (!(rate > 0.0))
            throw std::domain_error("LimitLaw::exponential: rate must be positive");
        return LimitLaw(Kind::exponential, rate);
    }
    // shape alpha, rate 1
    static LimitLaw gamma(double alpha) {
        if (!(alpha > 0.0))
            throw std::domain_error("LimitLaw::gamma: shape must be positive");
        return LimitLaw(Kind::gamma, alpha);
    }

    Kind kind() const { return kind_; }
    double parameter() const { return param_; }
    bool discrete() const { return kind_ == Kind::geometric; }

    std::string describe() const {
        switch (kind_) {
        case Kind::geometric:
            return "Geometric(p=" + detail::num(param_) + ")";
        case Kind::exponential:
            return "Exponential(rate=" + detail::num(param_) + ")";
        case Kind::gamma:
            return "Gamma(shape=" + detail::num(param_) + ", rate=1)";
        }
        return "?";
    }

    double pmf(std::int64_t i) const {
        if (!discrete())
            throw std::logic_error("LimitLaw::pmf: continuous law");
        if (i < 0)
            return 0.0;
        return param_ * std::exp(static_cast<double>(i) * std::log1p(-param_));
    }

    double pdf(double x) const {
        if (discrete())
            throw std::logic_error("LimitLaw::pdf: discrete law");
        if (x < 0.0)
            return 0.0;
        if (kind_ == Kind::exponential)
            return param_ * std::exp(-param_ * x);
        if (x == 0.0)
            return param_ < 1.0 ? std::numeric_limits<double>::infinity() : (param_ == 1.0 ? 1.0 : 0.0);
        return std::exp((param_ - 1.0) * std::log(x) - x - std::lgamma(param_));
    }

    // P(X <= x)
    double cdf(double x) const {
        if (x < 0.0)
            return 0.0;
        switch (kind_) {
        case Kind::geometric:
            return -std::expm1((std::floor(x) + 1.0) * std::log1p(-param_));
        case Kind::exponential:
            return -std::expm1(-param_ * x);
        case Kind::gamma:
            return regularized_gamma_p(param_, x);
        }
        return 0.0;
    }

    // P(X < x)
    double cdf_below(double x) const {
        if (!discrete())
            return cdf(x);
        if (x <= 0.0)
            return 0.0;
        return -std::expm1(std::ceil(x) * std::log1p(-param_));
    }

    // smallest x with cdf(x) >= u
    double quantile(double u) const {
        if (!(u >= 0.0 && u < 1.0))
            throw std::domain_error("LimitLaw::quantile: u must lie in [0,1)");
        switch (kind_) {
        case Kind::geometric: {
            double i = std::max(0.0, std::ceil(std::log1p(-u) / std::log1p(-param_)) - 1.0);
            while (i > 0.0 && cdf(i - 1.0) >= u)
                i -= 1.0;
            while (cdf(i) < u)
                i += 1.0;
            return i;
        }
        case Kind::exponential:
            return -std::log1p(-u) / param_;
        case Kind::gamma: {
            if (u == 0.0)
                return 0.0;
            double lo = 0.0, hi = std::max(1.0, param_);
            while (cdf(hi) < u)
                hi *= 2.0;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (cdf(mid) < u ? lo : hi) = mid;
            }
            return hi;
        }
        }
        return 0.0;
    }

    double moment(unsigned k) const {
        switch (kind_) {
        case Kind::geometric:
            return geo_limit_moments((1.0 - param_) / param_, k)[k];
        case Kind::exponential:
            return std::tgamma(static_cast<double>(k) + 1.0) / std::pow(param_, static_cast<double>(k));
        case Kind::gamma:
            return gamma_moment(param_, k);
        }
        return 0.0;
    }

    double mean() const { return moment(1); }

private:
    LimitLaw(Kind k, double p) : kind_(k), param_(p) {}
    Kind kind_;
    double param_;
};

// sup_x |F_n(x) - F(x)| over the sample ECDF F_n, checking both one-sided gaps
// at every distinct sample value.
inline double ks_distance(std::vector<double> sample, const LimitLaw& law) {
    if (sample.empty())
        throw std::invalid_argument("ks_distance: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < sample.size()) {
        std::size_t j = i;
        while (j < sample.size() && sample[j] == sample[i])
            ++j;
        const double x = sample[i];
        const double below = static_cast<double>(i) / n;
        const double at = static_cast<double>(j) / n;
        d = std::max(d, at - law.cdf(x));
        d = std::max(d, law.cdf_below(x) - below);
        i = j;
    }
    return std::clamp(d, 0.0, 1.0);
}

// (1/2) sum_i |empirical pmf(i) - pmf(i)|, with the law's mass beyond the
// sample maximum as a single bin.
inline double tv_distance_integer(const std::vector<std::int64_t>& sample, const LimitLaw& law) {
    if (!law.discrete())
        throw std::invalid_argument("tv_distance_integer: law must be discrete");
    if (sample.empty())
        throw std::invalid_argument("tv_distance_integer: empty sample");
    std::map<std::int64_t, std::int64_t> freq;
    for (auto v : sample)
        ++freq[v];
    const double n = static_cast<double>(sample.size());
    const std::int64_t hi = std::max<std::int64_t>(0, freq.rbegin()->first);
    CompensatedSum acc;
    for (const auto& [v, c] : freq)
        if (v < 0)
            acc.add(static_cast<double>(c) / n);
    for (std::int64_t i = 0; i <= hi; ++i) {
        const auto it = freq.find(i);
        const double emp = it == freq.end() ? 0.0 : static_cast<double>(it->second) / n;
        acc.add(std::fabs(emp - law.pmf(i)));
    }
    acc.add(1.0 - law.cdf(static_cast<double>(hi)));
    return std::clamp(0.5 * acc.value(), 0.0, 1.0);
}

struct MomentEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// sample mean of x^k and its standard error
inline MomentEstimate sample_moment(const std::vector<double>& x, unsigned k) {
    if (x.size() < 2)
        throw std::invalid_argument("sample_moment: need at least two observations");
    const double n = static_cast<double>(x.size());
    CompensatedSum s;
    for (double v : x)
        s.add(std::pow(v, static_cast<double>(k)));
    const double mean = s.value() / n;
    CompensatedSum ss;
    for (double v : x) {
        const double d = std::pow(v, static_cast<double>(k)) - mean;
        ss.add(d * d);
    }
    return {mean, std::sqrt(ss.value() / (n - 1.0) / n)};
}

// z_k = (mean of (count/scaler)^k - law moment k) / standard error, k = 1..K,
// at checkpoint index c of the batch.
inline std::vector<double> moment_zscores(const ReplicateBatch& batch, std::size_t c,
                                          const std::function<double(std::int64_t)>& scaler, const LimitLaw& law,
                                          unsigned K) {
    if (batch.replicates < 100)
        throw std::invalid_argument("moment_zscores: need at least 100 replicates");
    if (c >= batch.checkpoints.size())
        throw std::out_of_range("moment_zscores: checkpoint index out of range");
    const double s = scaler(batch.checkpoints[c]);
    auto x = batch.column(c);
    for (auto& v : x)
        v /= s;
    std::vector<double> z;
    for (unsigned k = 1; k <= K; ++k) {
        const auto est = sample_moment(x, k);
        const double target = law.moment(k);
        const double diff = est.mean - target;
        if (est.std_error == 0.0) {
            if (std::fabs(diff) > 1e-12 * std::max(1.0, std::fabs(target)))
                throw degenerate_sample("moment_zscores: zero sample variance with a nonzero mismatch");
            z.push_back(0.0);
        } else {
            z.push_back(diff / est.std_error);
        }
    }
    return z;
}

} // namespace limitlab
