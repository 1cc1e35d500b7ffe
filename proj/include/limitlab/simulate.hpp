#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "limitlab/kernel.hpp"
#include "limitlab/parallel.hpp"
#include "limitlab/rng.hpp"

namespace limitlab {

class budget_exceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimulationPlan {
    std::uint64_t seed = 1;
    std::int64_t replicates = 1000;
    std::vector<std::int64_t> checkpoints; // strictly increasing, last one is the horizon
    unsigned threads = 0;                  // 0: default_thread_count()
    std::optional<double> time_budget_seconds;
};

struct ReplicateBatch {
    std::uint64_t seed = 0;
    std::int64_t replicates = 0;
    std::vector<std::int64_t> checkpoints;
    std::vector<std::int64_t> counts; // row-major, replicates x checkpoints
    std::int64_t capped = 0;          // replicates stopped early at a population cap
    std::string model;

    std::int64_t at(std::int64_t r, std::size_t c) const {
        return counts[static_cast<std::size_t>(r) * checkpoints.size() + c];
    }
    // counts at checkpoint c across replicates
    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(static_cast<std::size_t>(replicates));
        for (std::int64_t r = 0; r < replicates; ++r)
            out[static_cast<std::size_t>(r)] = static_cast<double>(at(r, c));
        return out;
    }
};

namespace detail {

inline void check_plan(const SimulationPlan& plan) {
    if (plan.replicates < 1)
        throw std::invalid_argument("simulation: replicate count must be positive");
    if (plan.checkpoints.empty())
        throw std::invalid_argument("simulation: at least one checkpoint is required");
    for (std::size_t i = 0; i < plan.checkpoints.size(); ++i)
        if (plan.checkpoints[i] < 1 || (i > 0 && plan.checkpoints[i] <= plan.checkpoints[i - 1]))
            throw std::invalid_argument("simulation: checkpoints must be positive and strictly increasing");
}

// Runs one(r, stream, row) for every replicate; row has one slot per checkpoint.
// one returns true when the replicate hit a population cap.
template <class One>
ReplicateBatch run_replicates(const SimulationPlan& plan, std::string model, One&& one) {
    check_plan(plan);
    ReplicateBatch batch;
    batch.seed = plan.seed;
    batch.replicates = plan.replicates;
    batch.checkpoints = plan.checkpoints;
    batch.model = std::move(model);
    const std::size_t q = plan.checkpoints.size();
    batch.counts.assign(static_cast<std::size_t>(plan.replicates) * q, 0);
    std::vector<char> capped(static_cast<std::size_t>(plan.replicates), 0);

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const unsigned threads = plan.threads == 0 ? default_thread_count() : plan.threads;
    parallel_for(0, plan.replicates, threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t r = lo; r < hi; ++r) {
            if (plan.time_budget_seconds && (r & 63) == 0) {
                const std::chrono::duration<double> el = clock::now() - start;
                if (el.count() > *plan.time_budget_seconds)
                    throw budget_exceeded("simulation: time budget of " +
                                          std::to_string(*plan.time_budget_seconds) + " s exceeded");
            }
            Stream s(plan.seed, static_cast<std::uint64_t>(r));
            capped[static_cast<std::size_t>(r)] = one(s, &batch.counts[static_cast<std::size_t>(r) * q]) ? 1 : 0;
        }
    });
    for (char c : capped)
        batch.capped += c;
    return batch;
}

// Records the running count into the checkpoint slots reached at time t.
struct CheckpointCursor {
    const std::vector<std::int64_t>& cps;
    std::int64_t* row;
    std::size_t next = 0;

    void at_time(std::int64_t t, std::int64_t count) {
        while (next < cps.size() && cps[next] == t)
            row[next++] = count;
    }
    void finish(std::int64_t count) {
        while (next < cps.size())
            row[next++] = count;
    }
};

} // namespace detail

// Sum of c independent geometric variables with P(k) = p (1-p)^k, k >= 0.
// Small c: inversion per variable. Large c: the negative binomial law directly.
inline std::int64_t geometric_sum(std::int64_t c, double p, Stream& s) {
    if (c <= 0)
        return 0;
    if (c <= 16) {
        const double inv_log_q = 1.0 / std::log1p(-p);
        std::int64_t total = 0;
        for (std::int64_t i = 0; i < c; ++i)
            total += static_cast<std::int64_t>(std::floor(std::log(s.uniform()) * inv_log_q));
        return total;
    }
    std::negative_binomial_distribution<std::int64_t> nb(c, p);
    return nb(s);
}

// ---------------------------------------------------------------------------
// Critical Galton-Watson process with offspring P(k) = 2^{-(k+1)}, Y_0 = 1.

constexpr std::int64_t gw_population_cap = 1'000'000'000;

// Calls visit(t, Y_t) for t = 1..n until extinction. Returns true if the
// population reached the cap (the path is then stopped).
template <class Visit>
bool gw_path(std::int64_t n, Stream& s, Visit&& visit, std::int64_t cap = gw_population_cap) {
    std::int64_t y = 1;
    for (std::int64_t t = 1; t <= n; ++t) {
        y = geometric_sum(y, 0.5, s);
        visit(t, y);
        if (y == 0)
            return false;
        if (y >= cap)
            return true;
    }
    return false;
}

inline ReplicateBatch sim_gw(std::int64_t level, const SimulationPlan& plan) {
    if (level < 1)
        throw std::invalid_argument("sim_gw: level must be >= 1");
    const std::int64_t n = plan.checkpoints.empty() ? 0 : plan.checkpoints.back();
    return detail::run_replicates(plan, "gw level=" + std::to_string(level), [&](Stream& s, std::int64_t* row) {
        detail::CheckpointCursor cur{plan.checkpoints, row};
        std::int64_t count = 0;
        const bool capped = gw_path(n, s, [&](std::int64_t t, std::int64_t y) {
            if (y == level)
                ++count;
            cur.at_time(t, count);
        });
        cur.finish(count);
        return capped;
    });
}

// ---------------------------------------------------------------------------
// Branching process in varying environment with one immigrant per generation:
// Z_0 = 0, Z_t = sum of Z_{t-1} + 1 geometric(p_t) offspring counts.

template <class Visit>
void bpve_path(const OffspringSchedule& p, std::int64_t n, Stream& s, Visit&& visit) {
    std::int64_t z = 0;
    for (std::int64_t t = 1; t <= n; ++t) {
        z = geometric_sum(z + 1, p(t), s);
        visit(t, z);
    }
}

inline ReplicateBatch sim_bpve(const OffspringSchedule& p, const SimulationPlan& plan) {
    detail::check_plan(plan);
    const std::int64_t n = plan.checkpoints.back();
    for (std::int64_t t = 1; t <= n; ++t)
        (void)p(t); // validates every p_t before any work
    return detail::run_replicates(plan, "bpve " + p.description(), [&](Stream& s, std::int64_t* row) {
        detail::CheckpointCursor cur{plan.checkpoints, row};
        std::int64_t count = 0;
        bpve_path(p, n, s, [&](std::int64_t t, std::int64_t z) {
            if (z == 0)
                ++count;
            cur.at_time(t, count);
        });
        cur.finish(count);
        return false;
    });
}

// ---------------------------------------------------------------------------
// Embedded walk on the levels {kb, kb+a : k = 1..n} of a transient diffusion
// with scale function w(x) = x^{-gamma}.

constexpr std::int64_t levelwalk_step_cap = 1'000'000'000;

class LevelWalk {
public:
    // x0 > 0 below b adds a starting level under b (diffusion started at x0).
    LevelWalk(const ScaleSpec& spec, std::int64_t n, std::optional<double> x0 = std::nullopt) : n_(n) {
        spec.validate();
        if (n < 1)
            throw std::invalid_argument("LevelWalk: need at least one sphere");
        if (x0 && !(*x0 > 0.0 && *x0 < spec.b))
            throw std::invalid_argument("LevelWalk: start x0 must lie in (0, b)");
        if (x0)
            add_level(*x0, 0, 0);
        const bool merged = spec.a == spec.b;
        for (std::int64_t k = 1; k <= n; ++k) {
            const double base = spec.b * static_cast<double>(k);
            if (merged && k > 1)
                levels_.back().base_of = static_cast<std::int32_t>(k);
            else
                add_level(base, static_cast<std::int32_t>(k), 0);
            add_level(base + spec.a, 0, static_cast<std::int32_t>(k));
        }
        const double g = spec.gamma;
        const std::size_t L = levels_.size();
        up_threshold_.assign(L, 0);
        for (std::size_t l = 0; l < L; ++l) {
            double up;
            if (l == 0) {
                up = 1.0;
            } else if (l + 1 == L) {
                // escape to infinity from the top level before returning to the one below
                up = -std::expm1(-g * std::log(levels_[l].x / levels_[l - 1].x));
            } else {
                const double lo = levels_[l - 1].x, mid = levels_[l].x, hi = levels_[l + 1].x;
                up = std::expm1(-g * std::log(mid / lo)) / std::expm1(-g * std::log(hi / lo));
            }
            up_prob_.push_back(up);
            const double scaled = std::ldexp(up, 64);
            up_threshold_[l] = scaled >= 0x1.0p64 ? UINT64_MAX : static_cast<std::uint64_t>(scaled);
        }
    }

    std::size_t level_count() const { return levels_.size(); }
    double level(std::size_t l) const { return levels_[l].x; }
    double up_probability(std::size_t l) const { return up_prob_[l]; }
    std::int32_t base_of(std::size_t l) const { return levels_[l].base_of; }
    std::int32_t top_of(std::size_t l) const { return levels_[l].top_of; }
    std::int64_t spheres() const { return n_; }

    // Runs one path to escape. success[k] (k = 1..n) is set to 1 for weak
    // cutspheres. If path is given, every visited level index is appended.
    void run(Stream& s, std::vector<char>& success, std::vector<std::int32_t>* path = nullptr) const {
        status_scratch(success);
        std::size_t l = 0;
        const std::size_t top = levels_.size() - 1;
        std::int64_t steps = 0;
        visit(l, success, path);
        while (true) {
            const std::uint64_t thr = up_threshold_[l];
            const bool up = thr == UINT64_MAX || s() < thr;
            if (l == top && up)
                break;
            l = up ? l + 1 : l - 1;
            visit(l, success, path);
            if (++steps > levelwalk_step_cap)
                throw budget_exceeded("level walk: step cap exceeded");
        }
        // escape: every pending sphere is a cutsphere
        for (auto& c : success)
            c = (c == pending) ? 1 : 0;
    }

private:
    static constexpr char inactive = 0, pending = 1, failed = 2;

    struct Level {
        double x;
        std::int32_t base_of; // sphere k with kb at this level, or 0
        std::int32_t top_of;  // sphere k with kb+a at this level, or 0
    };

    void add_level(double x, std::int32_t base, std::int32_t top) { levels_.push_back({x, base, top}); }

    void status_scratch(std::vector<char>& st) const { st.assign(static_cast<std::size_t>(n_ + 1), inactive); }

    void visit(std::size_t l, std::vector<char>& st, std::vector<std::int32_t>* path) const {
        const Level& lv = levels_[l];
        if (lv.base_of && st[lv.base_of] == pending)
            st[lv.base_of] = failed;
        if (lv.top_of && st[lv.top_of] == inactive)
            st[lv.top_of] = pending;
        if (path)
            path->push_back(static_cast<std::int32_t>(l));
    }

    std::int64_t n_;
    std::vector<Level> levels_;
    std::vector<double> up_prob_;
    std::vector<std::uint64_t> up_threshold_;
};

inline ReplicateBatch sim_levelwalk(const ScaleSpec& spec, const SimulationPlan& plan,
                                    std::optional<double> x0 = std::nullopt) {
    detail::check_plan(plan);
    const LevelWalk walk(spec, plan.checkpoints.back(), x0);
    return detail::run_replicates(
        plan, "levelwalk gamma=" + detail::num(spec.gamma), [&](Stream& s, std::int64_t* row) {
            std::vector<char> success;
            walk.run(s, success);
            std::int64_t count = 0;
            std::size_t c = 0;
            for (std::int64_t k = 1; k <= walk.spheres(); ++k) {
                count += success[static_cast<std::size_t>(k)];
                while (c < plan.checkpoints.size() && plan.checkpoints[c] == k)
                    row[c++] = count;
            }
            return false;
        });
}

} // namespace limitlab
