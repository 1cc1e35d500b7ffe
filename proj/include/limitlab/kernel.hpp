#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "limitlab/weights.hpp"

namespace limitlab {

// Fills success probabilities r(i, j) for i = 0..j-1 of a fixed column j.
// Implementations may hold precomputed tables but are read-only once built.
class ColumnEvaluator {
public:
    virtual ~ColumnEvaluator() = default;
    virtual void fill(std::int64_t j, double* out) const = 0;
};

class KernelModel {
public:
    virtual ~KernelModel() = default;
    // rho(i, j) for 0 <= i < j; rho(0, j) is the reciprocal marginal.
    virtual double rho(std::int64_t i, std::int64_t j) const = 0;
    virtual std::string description() const = 0;

    // Evaluator valid for columns j <= N.
    virtual std::unique_ptr<ColumnEvaluator> columns(std::int64_t N) const;

    // r(0, j) for j = 0..N (entry 0 unused, set to 0).
    virtual std::vector<double> marginals(std::int64_t N) const {
        std::vector<double> out(static_cast<std::size_t>(N + 1), 0.0);
        for (std::int64_t j = 1; j <= N; ++j)
            out[static_cast<std::size_t>(j)] = checked_prob(rho(0, j), 0, j);
        return out;
    }

    static double checked_prob(double r, std::int64_t i, std::int64_t j) {
        if (!(r >= 1.0) || std::isinf(r))
            throw std::range_error("kernel: rho(" + std::to_string(i) + "," + std::to_string(j) +
                                   ") = " + std::to_string(r) + " is not a valid reciprocal probability");
        return 1.0 / r;
    }
};

namespace detail {

class PairwiseColumns : public ColumnEvaluator {
public:
    explicit PairwiseColumns(const KernelModel& k) : k_(k) {}
    void fill(std::int64_t j, double* out) const override {
        for (std::int64_t i = 0; i < j; ++i)
            out[i] = KernelModel::checked_prob(k_.rho(i, j), i, j);
    }

private:
    const KernelModel& k_;
};

} // namespace detail

inline std::unique_ptr<ColumnEvaluator> KernelModel::columns(std::int64_t) const {
    return std::make_unique<detail::PairwiseColumns>(*this);
}

// Value handle over an immutable kernel model.
class RhoKernel {
public:
    RhoKernel() = default;
    explicit RhoKernel(std::shared_ptr<const KernelModel> model) : model_(std::move(model)) {}

    double rho(std::int64_t i, std::int64_t j) const {
        check_pair(i, j);
        return model_->rho(i, j);
    }
    double success_prob(std::int64_t i, std::int64_t j) const {
        check_pair(i, j);
        return KernelModel::checked_prob(model_->rho(i, j), i, j);
    }
    std::string description() const { return model_->description(); }
    std::unique_ptr<ColumnEvaluator> columns(std::int64_t N) const { return model_->columns(N); }
    std::vector<double> marginals(std::int64_t N) const { return model_->marginals(N); }
    const KernelModel& model() const { return *model_; }

private:
    static void check_pair(std::int64_t i, std::int64_t j) {
        if (i < 0 || j <= i)
            throw std::invalid_argument("kernel: need 0 <= i < j");
    }
    std::shared_ptr<const KernelModel> model_;
};

// ---------------------------------------------------------------------------
// rho(i,j) = D(j-i) for i >= 1, rho(0,j) = marginal_scale * D(j)

class DistanceKernel : public KernelModel {
public:
    DistanceKernel(WeightSequence D, double marginal_scale)
        : D_(std::move(D)), scale_(marginal_scale) {}

    double rho(std::int64_t i, std::int64_t j) const override {
        return i == 0 ? scale_ * weight(j) : weight(j - i);
    }
    std::string description() const override {
        std::string s = "distance D(n)=" + D_.name;
        if (scale_ != 1.0)
            s += ", marginal scale " + detail::num(scale_);
        return s;
    }
    std::unique_ptr<ColumnEvaluator> columns(std::int64_t N) const override;

    double weight(std::int64_t n) const {
        const double d = D_(n);
        if (!(d >= 1.0))
            throw std::invalid_argument("kernel_distance: D(" + std::to_string(n) + ") = " +
                                        std::to_string(d) + " < 1");
        return d;
    }

private:
    WeightSequence D_;
    double scale_;
};

namespace detail {
class DistanceColumns : public ColumnEvaluator {
public:
    DistanceColumns(const DistanceKernel& k, std::int64_t N) : k_(k), recip_(static_cast<std::size_t>(N + 1)) {
        for (std::int64_t n = 1; n <= N; ++n)
            recip_[static_cast<std::size_t>(n)] = 1.0 / k.weight(n);
    }
    void fill(std::int64_t j, double* out) const override {
        out[0] = KernelModel::checked_prob(k_.rho(0, j), 0, j);
        for (std::int64_t i = 1; i < j; ++i)
            out[i] = recip_[static_cast<std::size_t>(j - i)];
    }

private:
    const DistanceKernel& k_;
    std::vector<double> recip_;
};
} // namespace detail

inline std::unique_ptr<ColumnEvaluator> DistanceKernel::columns(std::int64_t N) const {
    return std::make_unique<detail::DistanceColumns>(*this, N);
}

inline RhoKernel kernel_distance(WeightSequence D, double marginal_scale = 1.0) {
    if (!(marginal_scale > 0.0))
        throw std::invalid_argument("kernel_distance: marginal scale must be positive");
    return RhoKernel(std::make_shared<DistanceKernel>(std::move(D), marginal_scale));
}

// ---------------------------------------------------------------------------
// rho(0,i) = beta i, rho(i,j) = beta j^{1-alpha} (j^alpha - i^alpha)

class PowerKernel : public KernelModel {
public:
    PowerKernel(double alpha, double beta) : alpha_(alpha), beta_(beta) {}

    double rho(std::int64_t i, std::int64_t j) const override {
        const double jd = static_cast<double>(j);
        if (i == 0)
            return beta_ * jd;
        return -beta_ * jd * std::expm1(alpha_ * std::log(static_cast<double>(i) / jd));
    }
    std::string description() const override {
        return "power alpha=" + detail::num(alpha_) + " beta=" + detail::num(beta_);
    }
    std::unique_ptr<ColumnEvaluator> columns(std::int64_t N) const override;

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

private:
    double alpha_, beta_;
};

namespace detail {
class PowerColumns : public ColumnEvaluator {
public:
    PowerColumns(const PowerKernel& k, std::int64_t N) : k_(k), pw_(static_cast<std::size_t>(N + 1)) {
        for (std::int64_t i = 0; i <= N; ++i)
            pw_[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i), k.alpha());
    }
    void fill(std::int64_t j, double* out) const override {
        out[0] = KernelModel::checked_prob(k_.rho(0, j), 0, j);
        const double aj = pw_[static_cast<std::size_t>(j)];
        const double c = aj / (k_.beta() * static_cast<double>(j));
        bool ok = true;
        for (std::int64_t i = 1; i < j; ++i) {
            const double r = c / (aj - pw_[static_cast<std::size_t>(i)]);
            ok &= (r <= 1.0);
            out[i] = r;
        }
        if (!ok) {
            for (std::int64_t i = 1; i < j; ++i)
                if (!(out[i] <= 1.0))
                    KernelModel::checked_prob(1.0 / out[i], i, j);
        }
    }

private:
    const PowerKernel& k_;
    std::vector<double> pw_;
};
} // namespace detail

inline std::unique_ptr<ColumnEvaluator> PowerKernel::columns(std::int64_t N) const {
    return std::make_unique<detail::PowerColumns>(*this, N);
}

inline RhoKernel kernel_power(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("kernel_power: alpha and beta must be positive");
    return RhoKernel(std::make_shared<PowerKernel>(alpha, beta));
}

// ---------------------------------------------------------------------------
// Offspring parameter p_t, t >= 1, of the geometric law P(k) = p (1-p)^k.

class OffspringSchedule {
public:
    OffspringSchedule() = default;
    OffspringSchedule(std::function<double(std::int64_t)> p, std::string description,
                      std::optional<std::int64_t> length = std::nullopt)
        : p_(std::move(p)), description_(std::move(description)), length_(length) {}

    static OffspringSchedule constant(double p) {
        return {[p](std::int64_t) { return p; }, "p=" + detail::num(p)};
    }
    // p_t = 1/2 - r_t/4
    static OffspringSchedule from_r(std::function<double(std::int64_t)> r, std::string r_description) {
        return {[r = std::move(r)](std::int64_t t) { return 0.5 - 0.25 * r(t); },
                "p=1/2-r/4, r_t=" + r_description};
    }
    // r_t = t^{-e}
    static OffspringSchedule r_power(double e) {
        return from_r([e](std::int64_t t) { return std::pow(static_cast<double>(t), -e); },
                      "t^-" + detail::num(e));
    }
    // p_t = 1/2 - B/(4t), mean offspring m_t ~ 1 + B/t
    static OffspringSchedule b_family(double B) {
        return {[B](std::int64_t t) { return 0.5 - B / (4.0 * static_cast<double>(t)); },
                "p=1/2-B/(4t), B=" + detail::num(B)};
    }
    // p_1..p_L from a table
    static OffspringSchedule table(std::vector<double> values) {
        const auto L = static_cast<std::int64_t>(values.size());
        auto shared = std::make_shared<std::vector<double>>(std::move(values));
        return {[shared](std::int64_t t) { return (*shared)[static_cast<std::size_t>(t - 1)]; },
                "table of " + std::to_string(L), L};
    }

    double operator()(std::int64_t t) const {
        if (t < 1 || (length_ && t > *length_))
            throw std::out_of_range("OffspringSchedule: generation " + std::to_string(t) + " out of range");
        const double p = p_(t);
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("OffspringSchedule: p_" + std::to_string(t) + " = " +
                                        std::to_string(p) + " not in (0,1)");
        return p;
    }
    // log m_t with m_t = (1-p_t)/p_t
    double log_mean(std::int64_t t) const {
        const double p = (*this)(t);
        return std::log1p(-p) - std::log(p);
    }
    const std::string& description() const { return description_; }
    std::optional<std::int64_t> length() const { return length_; }

private:
    std::function<double(std::int64_t)> p_;
    std::string description_;
    std::optional<std::int64_t> length_;
};

// rho(i,j) = 1 + sum_{t=i+1}^{j} m_t ... m_j

class BranchingKernel : public KernelModel {
public:
    explicit BranchingKernel(OffspringSchedule p) : p_(std::move(p)) {}

    double rho(std::int64_t i, std::int64_t j) const override {
        double logsum = 0.0;
        CompensatedSum acc(1.0);
        for (std::int64_t t = j; t > i; --t) {
            logsum += p_.log_mean(t);
            acc.add(std::exp(logsum));
        }
        return acc.value();
    }
    std::string description() const override { return "branching " + p_.description(); }
    std::unique_ptr<ColumnEvaluator> columns(std::int64_t N) const override;

    std::vector<double> marginals(std::int64_t N) const override {
        // R_j = m_j (R_{j-1} + 1), rho(0,j) = 1 + R_j
        std::vector<double> out(static_cast<std::size_t>(N + 1), 0.0);
        double R = 0.0;
        for (std::int64_t j = 1; j <= N; ++j) {
            R = std::exp(p_.log_mean(j)) * (R + 1.0);
            out[static_cast<std::size_t>(j)] = checked_prob(1.0 + R, 0, j);
        }
        return out;
    }
    const OffspringSchedule& schedule() const { return p_; }

private:
    OffspringSchedule p_;
};

namespace detail {
class BranchingColumns : public ColumnEvaluator {
public:
    BranchingColumns(const BranchingKernel& k, std::int64_t N) : logm_(static_cast<std::size_t>(N + 1), 0.0) {
        for (std::int64_t t = 1; t <= N; ++t)
            logm_[static_cast<std::size_t>(t)] = k.schedule().log_mean(t);
    }
    void fill(std::int64_t j, double* out) const override {
        double logsum = 0.0;
        CompensatedSum acc(1.0);
        for (std::int64_t t = j; t >= 1; --t) {
            logsum += logm_[static_cast<std::size_t>(t)];
            acc.add(std::exp(logsum));
            out[t - 1] = KernelModel::checked_prob(acc.value(), t - 1, j);
        }
    }

private:
    std::vector<double> logm_;
};
} // namespace detail

inline std::unique_ptr<ColumnEvaluator> BranchingKernel::columns(std::int64_t N) const {
    return std::make_unique<detail::BranchingColumns>(*this, N);
}

inline RhoKernel kernel_branching(OffspringSchedule p) {
    return RhoKernel(std::make_shared<BranchingKernel>(std::move(p)));
}

// ---------------------------------------------------------------------------
// Scale function w(x) = x^{-gamma} on the level set {kb, kb+a}.

struct ScaleSpec {
    double gamma = 1.0;
    double a = 1.0;
    double b = 2.0;

    static ScaleSpec brownian(double d, double a, double b) { return {d - 2.0, a, b}; }
    static ScaleSpec gbm(double mu, double sigma, double a, double b) {
        if (!(sigma > 0.0))
            throw std::invalid_argument("ScaleSpec::gbm: sigma must be positive");
        return {2.0 * mu / (sigma * sigma) - 1.0, a, b};
    }
    void validate() const {
        if (!(gamma > 0.0))
            throw std::invalid_argument("ScaleSpec: exponent gamma must be positive (transient case)");
        if (!(a > 0.0) || !(b >= a))
            throw std::invalid_argument("ScaleSpec: need b >= a > 0");
    }
};

class ScaleKernel : public KernelModel {
public:
    explicit ScaleKernel(ScaleSpec s) : s_(s), c_(s.a / s.b) {}

    // P(escape to infinity from level j+c before returning to j), scaled by b
    double marginal(std::int64_t j) const {
        return -std::expm1(-s_.gamma * std::log1p(c_ / static_cast<double>(j)));
    }
    double rho(std::int64_t i, std::int64_t j) const override {
        if (i == 0)
            return 1.0 / marginal(j);
        const double hit = -std::expm1(s_.gamma * std::log(static_cast<double>(i) / (static_cast<double>(j) + c_)));
        return hit / marginal(j);
    }
    std::string description() const override {
        return "scale gamma=" + detail::num(s_.gamma) + " a=" + detail::num(s_.a) + " b=" + detail::num(s_.b);
    }
    const ScaleSpec& spec() const { return s_; }

private:
    ScaleSpec s_;
    double c_;
};

inline RhoKernel kernel_scale(const ScaleSpec& spec) {
    spec.validate();
    return RhoKernel(std::make_shared<ScaleKernel>(spec));
}

} // namespace limitlab
