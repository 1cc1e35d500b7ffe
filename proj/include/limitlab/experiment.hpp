#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "limitlab/kernel.hpp"
#include "limitlab/moments.hpp"
#include "limitlab/multisum.hpp"
#include "limitlab/simulate.hpp"
#include "limitlab/special.hpp"
#include "limitlab/stats.hpp"

namespace limitlab {

class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Configuration: one `key = value` per line, `#` starts a comment.

class ParamSet {
public:
    std::map<std::string, std::string> values;

    bool has(const std::string& k) const { return values.count(k) != 0; }

    const std::string& text(const std::string& k) const {
        auto it = values.find(k);
        if (it == values.end())
            throw config_error("missing key '" + k + "'");
        return it->second;
    }

    double real(const std::string& k) const {
        const auto& s = text(k);
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size())
                throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw config_error("key '" + k + "': '" + s + "' is not a number");
        }
    }

    std::int64_t integer(const std::string& k) const { return parse_int(k, text(k)); }

    std::vector<std::int64_t> integer_list(const std::string& k) const {
        std::vector<std::int64_t> out;
        std::stringstream ss(text(k));
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(parse_int(k, trim(item)));
        if (out.empty())
            throw config_error("key '" + k + "': empty list");
        return out;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

private:
    static std::int64_t parse_int(const std::string& k, const std::string& s) {
        try {
            std::size_t pos = 0;
            // accept 1e5 style integers
            const double v = std::stod(s, &pos);
            if (pos != s.size() || v != std::floor(v) || std::fabs(v) > 9.0e15)
                throw std::invalid_argument(s);
            return static_cast<std::int64_t>(v);
        } catch (const std::exception&) {
            throw config_error("key '" + k + "': '" + s + "' is not an integer");
        }
    }
};

inline ParamSet parse_config(std::istream& in) {
    ParamSet p;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = ParamSet::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected 'key = value'");
        const auto key = ParamSet::trim(line.substr(0, eq));
        const auto val = ParamSet::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw config_error("line " + std::to_string(lineno) + ": empty key or value");
        if (!p.values.emplace(key, val).second)
            throw config_error("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return p;
}

inline ParamSet parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open config file '" + path + "'");
    return parse_config(in);
}

// ---------------------------------------------------------------------------
// Reports

struct SeriesRow {
    std::string series;
    std::int64_t horizon = 0;
    double observed = 0.0;
    double predicted = 0.0;
    std::optional<double> std_error;

    double ratio() const { return observed / predicted; }
};

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string criterion;
};

struct ExperimentReport {
    std::string id;
    std::string title;
    ParamSet config;
    std::string prediction;
    std::vector<SeriesRow> rows;
    std::vector<CheckResult> checks;
    nlohmann::json metrics = nlohmann::json::object();
    std::string started_at;
    double wall_seconds = 0.0;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }
    void check(std::string name, bool ok, double value, std::string criterion) {
        checks.push_back({std::move(name), ok, value, std::move(criterion)});
    }
};

namespace detail {

inline nlohmann::json finite_or_null(double x) {
    if (std::isfinite(x))
        return x;
    return nullptr;
}

inline std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Writes to a sibling temporary file, then renames over the target.
inline void write_atomically(const std::filesystem::path& target, const std::string& body) {
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << body;
        out.flush();
        if (!out)
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
}

} // namespace detail

inline nlohmann::json report_to_json(const ExperimentReport& r) {
    nlohmann::json j;
    j["experiment"] = r.id;
    j["title"] = r.title;
    j["config"] = r.config.values;
    j["prediction"] = r.prediction;
    auto rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json x;
        x["series"] = row.series;
        x["horizon"] = row.horizon;
        x["observed"] = detail::finite_or_null(row.observed);
        x["predicted"] = detail::finite_or_null(row.predicted);
        x["ratio"] = detail::finite_or_null(row.ratio());
        x["stderr"] = row.std_error ? detail::finite_or_null(*row.std_error) : nlohmann::json(nullptr);
        rows.push_back(x);
    }
    j["rows"] = rows;
    auto checks = nlohmann::json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", detail::finite_or_null(c.value)},
                          {"criterion", c.criterion}});
    j["checks"] = checks;
    j["metrics"] = r.metrics;
    j["passed"] = r.passed();
    j["started_at"] = r.started_at;
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

inline const char* csv_header = "horizon,observed,predicted,ratio,stderr,series\n";

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string rows_to_csv(const std::vector<SeriesRow>& rows) {
    std::string out = csv_header;
    for (const auto& r : rows) {
        out += std::to_string(r.horizon) + "," + detail::fmt17(r.observed) + "," + detail::fmt17(r.predicted) + "," +
               detail::fmt17(r.ratio()) + "," + (r.std_error ? detail::fmt17(*r.std_error) : "") + "," + csv_field(r.series) +
               "\n";
    }
    return out;
}

// CSV from a saved JSON report. A report without rows gives the header only.
inline std::string plotdata_from_json(const nlohmann::json& j) {
    std::vector<SeriesRow> rows;
    if (j.contains("rows"))
        for (const auto& x : j.at("rows")) {
            SeriesRow r;
            r.series = x.value("series", "");
            r.horizon = x.at("horizon").get<std::int64_t>();
            auto num = [](const nlohmann::json& v) {
                return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
            };
            r.observed = num(x.at("observed"));
            r.predicted = num(x.at("predicted"));
            if (x.contains("stderr") && !x.at("stderr").is_null())
                r.std_error = x.at("stderr").get<double>();
            rows.push_back(r);
        }
    return rows_to_csv(rows);
}

// ---------------------------------------------------------------------------
// Experiment registry

struct Experiment {
    std::string id;
    std::string title;
    std::string description;
    std::vector<std::pair<std::string, std::string>> defaults;
    std::function<void(const ParamSet&, ExperimentReport&)> run;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok)
        throw config_error(what);
}

inline bool error_decreasing(const std::vector<double>& ratios) {
    for (std::size_t i = 1; i < ratios.size(); ++i) {
        const double prev = std::fabs(ratios[i - 1] - 1.0), cur = std::fabs(ratios[i] - 1.0);
        if (cur <= 1e-12 && prev <= 1e-12)
            continue; // exact at both horizons
        if (!(cur < prev))
            return false;
    }
    return true;
}

inline bool nondecreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[i - 1])
            return false;
    return true;
}

inline std::vector<std::int64_t> horizons_of(const ParamSet& p) {
    auto h = p.integer_list("horizons");
    try {
        check_horizons(h);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("horizons: ") + e.what());
    }
    return h;
}

inline std::vector<unsigned> orders_of(const ParamSet& p) {
    std::vector<unsigned> out;
    for (auto k : p.integer_list("orders")) {
        require(k >= 1 && k <= 20, "orders must lie in 1..20");
        out.push_back(static_cast<unsigned>(k));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline SimulationPlan plan_of(const ParamSet& p) {
    SimulationPlan plan;
    const auto seed = p.integer("seed");
    require(seed >= 0, "seed must be nonnegative");
    plan.seed = static_cast<std::uint64_t>(seed);
    plan.replicates = p.integer("replicates");
    require(plan.replicates >= 100, "replicates must be at least 100");
    plan.checkpoints = horizons_of(p);
    if (p.has("time_budget"))
        plan.time_budget_seconds = p.real("time_budget");
    return plan;
}

// Ratio-to-prediction curves over horizons for each order, with a final-band
// and/or trend check.
struct CurveChecks {
    std::optional<double> final_band; // |ratio - 1| <= band at the last horizon
    bool trend = false;               // |ratio - 1| strictly decreasing
    bool monotone = false;            // observed nondecreasing in n
};

inline void add_curve(ExperimentReport& rep, const std::string& series, const std::vector<std::int64_t>& hs,
                      const std::vector<double>& observed, const std::vector<double>& predicted,
                      const CurveChecks& cc) {
    std::vector<double> ratios;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        rep.rows.push_back({series, hs[i], observed[i], predicted[i], std::nullopt});
        ratios.push_back(observed[i] / predicted[i]);
    }
    if (cc.final_band) {
        const double err = std::fabs(ratios.back() - 1.0);
        rep.check(series + ": ratio within band at n=" + std::to_string(hs.back()), err <= *cc.final_band, err,
                  "|ratio-1| <= " + num(*cc.final_band));
    }
    if (cc.trend)
        rep.check(series + ": |ratio-1| decreasing in n", error_decreasing(ratios), std::fabs(ratios.back() - 1.0),
                  "strictly decreasing over horizons");
    if (cc.monotone)
        rep.check(series + ": nondecreasing in n", nondecreasing(observed), observed.back(), "nondecreasing");
}

inline std::vector<double> partial_sums_at(const WeightSequence& w, const std::vector<std::int64_t>& hs) {
    const auto f = w.reciprocals(hs.back());
    std::vector<double> out;
    CompensatedSum acc;
    std::size_t next = 0;
    for (std::int64_t j = 0; j <= hs.back(); ++j) {
        acc.add(f[static_cast<std::size_t>(j)]);
        while (next < hs.size() && hs[next] == j) {
            out.push_back(acc.value());
            ++next;
        }
    }
    return out;
}

// -- multiple sums ----------------------------------------------------------

inline void run_phi_summable(const ParamSet& p, ExperimentReport& rep) {
    const double e = p.real("exponent");
    const auto shift = p.integer("shift");
    const auto n0 = p.integer("n0");
    require(e > 1.0, "exponent must exceed 1 for a summable weight");
    require(shift >= 0, "shift must be a nonnegative integer");
    require(n0 >= 1, "n0 must be >= 1");
    const auto hs = horizons_of(p);
    const auto ks = orders_of(p);
    const auto w = weights_shifted_power(e, static_cast<double>(shift), n0);
    const double zeta = zeta_tail(0, e, shift + n0).value;
    rep.prediction = "Phi(n,m) -> zeta^m with zeta = " + fmt17(zeta);
    rep.metrics["zeta"] = zeta;
    const auto table = phi_table(w, hs.back(), ks.back());
    for (auto m : ks) {
        std::vector<double> obs, pred;
        const auto pr = predict(regime::Summable{zeta}, m);
        for (auto n : hs) {
            obs.push_back(table[m][static_cast<std::size_t>(n)]);
            pred.push_back(pr.predicted(static_cast<double>(n)));
        }
        add_curve(rep, "phi m=" + std::to_string(m), hs, obs, pred, {p.real("tolerance"), false, true});
    }
}

inline void run_phi_rv(const ParamSet& p, ExperimentReport& rep) {
    const double e = p.real("exponent");
    const double scale = p.real("scale");
    require(e >= 0.0 && e <= 1.0, "exponent must lie in [0,1] for a divergent regularly varying sum");
    require(scale > 0.0, "scale must be positive");
    const double tau = 1.0 - e;
    const auto hs = horizons_of(p);
    const auto ks = orders_of(p);
    const auto w = weights_power(e, scale);
    const auto S = partial_sums_at(w, hs);
    rep.prediction = "Phi(n,m)/S(n)^m -> lambda_tau^{-(m-1)}, tau = " + num(tau);
    for (auto m : ks) {
        const auto pr = predict(regime::RegularlyVarying{tau}, m);
        std::vector<double> obs, pred;
        for (std::size_t i = 0; i < hs.size(); ++i) {
            obs.push_back(phi(w, hs[i], m).value / std::pow(S[i], m));
            pred.push_back(pr.coefficient);
        }
        add_curve(rep, "phi/S^m m=" + std::to_string(m), hs, obs, pred, {p.real("tolerance"), true, false});
    }
}

inline Experiment iterated_log_experiment(const std::string& id, const std::string& which) {
    Experiment x;
    x.id = id;
    if (which == "i") {
        x.title = "Convergent multiple sums of iterated-log weights (s > 1)";
        x.description = "U_n(k,m,n0,s) -> zeta(m,s)^k. With m=0, n0=1 this is a k-fold representation of "
                        "the Riemann zeta function: the limit is zeta(s)^k.";
        x.defaults = {{"m", "0"}, {"s", "2"}, {"n0", "1"}, {"orders", "1,2,3"}, {"horizons", "100,1000,10000"},
                      {"tolerance", "0.01"}};
    } else if (which == "ii") {
        x.title = "Multiple sums at the critical exponent s = 1";
        x.description = "U_n(k,m,n0,1) / (log_{m+1} n)^k -> 1. Convergence is at an iterated-log rate; "
                        "the check is the trend of the ratio toward 1.";
        x.defaults = {{"m", "1"}, {"s", "1"}, {"n0", "2"}, {"orders", "1,2"}, {"horizons", "100,1000,10000"}};
    } else if (which == "iii") {
        x.title = "Multiple sums with 0 <= s < 1 and at least one iterated log";
        x.description = "U_n(k,m,n0,s) ~ (log_m n)^{k(1-s)} / (1-s)^k. Trend check of the ratio toward 1.";
        x.defaults = {{"m", "1"}, {"s", "0.5"}, {"n0", "2"}, {"orders", "1,2"}, {"horizons", "100,1000,10000"}};
    } else {
        x.title = "Polynomial weights n^s with 0 <= s < 1";
        x.description = "U_n(k,0,n0,s) / n^{k(1-s)} -> (1/(1-s)) (Gamma(2-s)Gamma(1-s)/Gamma(3-2s))^{k-1}.";
        x.defaults = {{"m", "0"}, {"s", "0.5"}, {"n0", "1"}, {"orders", "1,2,3"}, {"horizons", "100,1000,10000"},
                      {"tolerance", "0.25"}};
    }
    x.run = [which](const ParamSet& p, ExperimentReport& rep) {
        const auto m = p.integer("m");
        const double s = p.real("s");
        const auto n0 = p.integer("n0");
        require(m >= 0 && m <= 3, "m must lie in 0..3");
        const auto mu = static_cast<unsigned>(m);
        require(n0 >= script_O(mu), "n0 must be at least the iterated-log threshold " + std::to_string(script_O(mu)));
        if (which == "i")
            require(s > 1.0, "this case needs s > 1");
        else if (which == "ii")
            require(s == 1.0, "this case needs s = 1");
        else if (which == "iii")
            require(s >= 0.0 && s < 1.0 && m >= 1, "this case needs 0 <= s < 1 and m >= 1");
        else
            require(s >= 0.0 && s < 1.0 && m == 0, "this case needs 0 <= s < 1 and m = 0");
        const auto hs = horizons_of(p);
        const auto ks = orders_of(p);
        const auto table = phi_table(weights_lambda(mu, s, n0), hs.back(), ks.back());
        for (auto k : ks) {
            const auto pr = predict(regime::IteratedLog{mu, s, n0}, k);
            if (k == ks.front())
                rep.prediction = pr.regime + ": U_n ~ coefficient * " + pr.scaling.describe();
            std::vector<double> obs, pred;
            for (auto n : hs) {
                obs.push_back(table[k][static_cast<std::size_t>(n)]);
                pred.push_back(pr.predicted(static_cast<double>(n)));
            }
            CurveChecks cc;
            if (which == "i") {
                cc.final_band = p.real("tolerance");
                cc.monotone = true;
            } else if (which == "iv") {
                cc.final_band = p.real("tolerance");
                cc.trend = true;
            } else {
                cc.trend = true;
            }
            add_curve(rep, "U k=" + std::to_string(k), hs, obs, pred, cc);
            rep.metrics["coefficient k=" + std::to_string(k)] = pr.coefficient;
        }
    };
    return x;
}

inline void run_thg(const ParamSet& p, ExperimentReport& rep) {
    const double alpha = p.real("alpha");
    require(alpha > 0.0, "alpha must be positive");
    const auto hs = horizons_of(p);
    const auto ks = orders_of(p);
    const auto psi = psi_table(kernel_power(alpha, 1.0), hs.back(), ks.back());
    rep.prediction = "sum / (log n)^k -> prod_{j<k}(j+alpha) / (k! alpha^k)";
    for (auto k : ks) {
        const auto pr = predict(regime::Power{alpha, 1.0}, k);
        std::vector<double> obs, pred;
        for (auto n : hs) {
            obs.push_back(psi(n, k));
            pred.push_back(pr.predicted(static_cast<double>(n)));
        }
        add_curve(rep, "power-kernel sum k=" + std::to_string(k), hs, obs, pred, {std::nullopt, true, true});
    }
}

// -- exact moments of the count ---------------------------------------------

inline void run_geo_moments(const ParamSet& p, ExperimentReport& rep) {
    const double e = p.real("exponent");
    const auto shift = p.integer("shift");
    require(e > 1.0, "exponent must exceed 1 for a summable weight");
    require(shift >= 1, "shift must be a positive integer (D(n) > 1)");
    const auto hs = horizons_of(p);
    const auto ks = orders_of(p);
    const double zeta = zeta_tail(0, e, shift + 1).value;
    const auto limit = geo_limit_moments(zeta, ks.back());
    const auto t = moment_table(kernel_distance(weights_shifted_power(e, static_cast<double>(shift))), hs, ks.back());
    rep.prediction = "count -> Geometric(1/(zeta+1)), zeta = " + fmt17(zeta);
    rep.metrics["zeta"] = zeta;
    for (auto k : ks) {
        std::vector<double> obs, pred;
        bool bounded = true;
        for (std::size_t h = 0; h < hs.size(); ++h) {
            obs.push_back(t.at(h, k));
            pred.push_back(limit[k]);
            bounded &= t.at(h, k) <= limit[k] + 1e-9;
        }
        const auto name = "E count^" + std::to_string(k);
        add_curve(rep, name, hs, obs, pred, {p.real("tolerance"), false, true});
        rep.check(name + ": bounded by the limit moment", bounded, obs.back(), "<= limit + 1e-9");
    }
}

inline void run_exp_moments(const ParamSet& p, ExperimentReport& rep) {
    const double e = p.real("exponent");
    const double scale = p.real("scale");
    require(e >= 0.0 && e <= 1.0, "exponent must lie in [0,1]");
    require(scale >= 1.0, "scale must be >= 1 so that D(n) >= 1");
    const double sigma = 1.0 - e;
    const double lam = lambda_sigma(sigma);
    const auto hs = horizons_of(p);
    const auto ks = orders_of(p);
    const auto w = weights_power(e, scale);
    const auto S = partial_sums_at(w, hs);
    const auto t = moment_table(kernel_distance(w, lam), hs, ks.back());
    const auto law = LimitLaw::exponential(lam);
    rep.prediction = "count/S(n) -> Exponential(lambda_sigma), sigma = " + num(sigma) + ", lambda = " + fmt17(lam);
    for (auto k : ks) {
        std::vector<double> obs, pred;
        for (std::size_t h = 0; h < hs.size(); ++h) {
            obs.push_back(t.at(h, k) / std::pow(S[h], k));
            pred.push_back(law.moment(k));
        }
        add_curve(rep, "E (count/S)^" + std::to_string(k), hs, obs, pred, {p.real("tolerance"), true, false});
    }
}

inline void run_gamma_moments(const ParamSet& p, ExperimentReport& rep) {
    const double alpha = p.real("alpha");
    const double beta = p.real("beta");
    require(alpha > 0.0 && beta > 0.0, "alpha and beta must be positive");
    const auto hs = horizons_of(p);
    const auto ks = orders_of(p);
    const auto t = moment_table(kernel_power(alpha, beta), hs, ks.back());
    rep.prediction = "alpha*beta*count/log n -> Gamma(alpha,1)";
    for (auto k : ks) {
        const auto pr = predict(regime::PowerMoment{alpha, beta}, k);
        std::vector<double> obs, pred;
        for (std::size_t h = 0; h < hs.size(); ++h) {
            obs.push_back(t.at(h, k) / std::pow(std::log(static_cast<double>(hs[h])), k));
            pred.push_back(pr.coefficient);
        }
        add_curve(rep, "E count^" + std::to_string(k) + "/(log n)^" + std::to_string(k), hs, obs, pred,
                  {p.real("tolerance"), true, false});
    }
}

// -- Monte Carlo --------------------------------------------------------------

// Empirical first and second moments against exact kernel moments, 4 se.
inline void mc_cross_check(ExperimentReport& rep, const ReplicateBatch& batch, const MomentTable& exact,
                           unsigned K) {
    for (std::size_t c = 0; c < batch.checkpoints.size(); ++c) {
        const auto x = batch.column(c);
        for (unsigned k = 1; k <= K; ++k) {
            const auto est = sample_moment(x, k);
            const double target = exact.at(c, k);
            rep.rows.push_back({"empirical E count^" + std::to_string(k), batch.checkpoints[c], est.mean, target,
                                est.std_error});
            const double z = est.std_error > 0 ? (est.mean - target) / est.std_error
                                                : (est.mean == target ? 0.0 : INFINITY);
            rep.check("E count^" + std::to_string(k) + " at n=" + std::to_string(batch.checkpoints[c]) +
                          " matches exact moment",
                      std::fabs(z) <= 4.0, z, "|z| <= 4");
        }
    }
}

inline void law_metrics(ExperimentReport& rep, const ReplicateBatch& batch,
                        const std::function<double(std::int64_t)>& scaler, const LimitLaw& law) {
    const std::size_t last = batch.checkpoints.size() - 1;
    auto x = batch.column(last);
    const double s = scaler(batch.checkpoints[last]);
    for (auto& v : x)
        v /= s;
    rep.metrics["limit_law"] = law.describe();
    rep.metrics["ks_scaled_count_vs_limit"] = ks_distance(x, law);
    try {
        rep.metrics["moment_zscores_vs_limit"] = moment_zscores(batch, last, scaler, law, 2);
    } catch (const degenerate_sample&) {
        rep.metrics["moment_zscores_vs_limit"] = nullptr;
    }
}

inline void run_levelwalk(const ParamSet& p, ExperimentReport& rep, const ScaleSpec& spec,
                          std::optional<double> x0) {
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(e.what());
    }
    const auto plan = plan_of(p);
    const auto batch = sim_levelwalk(spec, plan, x0);
    const auto kernel = kernel_scale(spec);
    const auto exact = moment_table(kernel, plan.checkpoints, 2);
    mc_cross_check(rep, batch, exact, 2);

    const double c = spec.a / spec.b;
    auto scaler = [c](std::int64_t n) { return c * std::log(static_cast<double>(n)); };
    const auto law = LimitLaw::gamma(spec.gamma);
    std::vector<double> ratios;
    for (std::size_t i = 0; i < plan.checkpoints.size(); ++i) {
        const auto n = plan.checkpoints[i];
        const double scaled = exact.at(i, 1) / scaler(n);
        rep.rows.push_back({"exact E count/((a/b) log n)", n, scaled, law.mean(), std::nullopt});
        const auto est = sample_moment(batch.column(i), 1);
        rep.rows.push_back({"empirical E count/((a/b) log n)", n, est.mean / scaler(n), law.mean(),
                            est.std_error / scaler(n)});
        ratios.push_back(scaled / law.mean());
    }
    rep.check("scaled exact mean at n=" + std::to_string(plan.checkpoints.back()) + " within (0.5, 1.5) of limit mean",
              ratios.back() > 0.5 && ratios.back() < 1.5, ratios.back(), "0.5 < ratio < 1.5");
    rep.check("scaled exact mean moves toward the limit mean",
              std::fabs(ratios.back() - 1.0) < std::fabs(ratios.front() - 1.0), ratios.back(),
              "|ratio-1| smaller at the last checkpoint than at the first");
    law_metrics(rep, batch, scaler, law);
    rep.prediction = "count/((a/b) log n) -> " + law.describe();
}

inline void run_gw(const ParamSet& p, ExperimentReport& rep) {
    const auto plan = plan_of(p);
    require(plan.checkpoints.size() >= 2, "horizons need at least two checkpoints (stabilization check)");
    const auto batch = sim_gw(1, plan);
    const auto kernel = kernel_distance(weights_shifted_power(2.0));
    const auto exact = moment_table(kernel, plan.checkpoints, 1);
    mc_cross_check(rep, batch, exact, 1);

    const double zeta = std::numbers::pi * std::numbers::pi / 6.0 - 1.0;
    const auto law = LimitLaw::geometric_mean(zeta);
    const std::size_t last = plan.checkpoints.size() - 1;
    std::vector<std::int64_t> final_counts;
    double changed = 0;
    for (std::int64_t r = 0; r < batch.replicates; ++r) {
        final_counts.push_back(batch.at(r, last));
        changed += batch.at(r, last) != batch.at(r, 0);
    }
    const double tv = tv_distance_integer(final_counts, law);
    rep.check("TV distance to " + law.describe() + " at n=" + std::to_string(plan.checkpoints.back()),
              tv <= p.real("tv_tolerance"), tv, "<= " + num(p.real("tv_tolerance")));
    const double frac = changed / static_cast<double>(batch.replicates);
    rep.check("fraction of paths with N_" + std::to_string(plan.checkpoints.back()) + " != N_" +
                  std::to_string(plan.checkpoints.front()),
              frac <= p.real("stabilization_tolerance"), frac, "<= " + num(p.real("stabilization_tolerance")));
    for (std::size_t i = 0; i < plan.checkpoints.size(); ++i)
        rep.rows.push_back({"exact E count vs limit mean", plan.checkpoints[i], exact.at(i, 1), zeta, std::nullopt});
    rep.metrics["capped_replicates"] = batch.capped;
    rep.metrics["tv_distance"] = tv;
    rep.metrics["stabilization_fraction"] = frac;
    law_metrics(rep, batch, [](std::int64_t) { return 1.0; }, law);
    rep.prediction = "N_n -> " + law.describe() + " almost surely";
}

inline void run_bpve(const ParamSet& p, ExperimentReport& rep, bool b_family) {
    const auto plan = plan_of(p);
    const double eps = p.real("epsilon");
    OffspringSchedule sched;
    LimitLaw law = LimitLaw::exponential(1.0);
    std::function<double(double, double)> approx;
    if (b_family) {
        const double B = p.real("B");
        require(B >= 0.0 && B < 1.0, "B must lie in [0,1)");
        sched = OffspringSchedule::b_family(B);
        if (B > 0.0)
            law = LimitLaw::gamma(1.0 - B);
        approx = [B](double i, double j) { return std::pow(j, B) * (std::pow(j, 1 - B) - std::pow(i, 1 - B)) / (1 - B); };
    } else {
        const double e = p.real("r_exponent");
        require(e > 1.0, "r_exponent must exceed 1 so that r_t is summable");
        sched = OffspringSchedule::r_power(e);
        approx = [](double i, double j) { return j - i; };
    }
    const auto kernel = kernel_branching(sched);
    const auto batch = sim_bpve(sched, plan);
    const auto exact = moment_table(kernel, plan.checkpoints, 1);
    mc_cross_check(rep, batch, exact, 1);

    // kernel asymptotics over i, j - i in [200, 2000]
    double worst = 0.0;
    for (std::int64_t gap = 200; gap <= 2000; gap += 100)
        for (std::int64_t i = 200; i <= 2000; i += 100) {
            const std::int64_t j = i + gap;
            worst = std::max(worst, std::fabs(kernel.rho(i, j) / approx(double(i), double(j)) - 1.0));
        }
    rep.check("kernel asymptotic ratio on i, j-i in [200,2000]", worst <= eps, worst, "max |ratio-1| <= " + num(eps));
    double worst_marginal = 0.0;
    for (std::int64_t i = 200; i <= 2000; i += 100)
        worst_marginal = std::max(worst_marginal, std::fabs(kernel.rho(0, i) / approx(0.0, double(i)) - 1.0));
    rep.check("marginal asymptotic ratio on i in [200,2000]", worst_marginal <= eps, worst_marginal,
              "max |ratio-1| <= " + num(eps));

    auto scaler = [](std::int64_t n) { return std::log(static_cast<double>(n)); };
    for (std::size_t i = 0; i < plan.checkpoints.size(); ++i)
        rep.rows.push_back({"exact E count/log n", plan.checkpoints[i], exact.at(i, 1) / scaler(plan.checkpoints[i]),
                            law.mean(), std::nullopt});
    law_metrics(rep, batch, scaler, law);
    rep.prediction = "I_n/log n -> " + law.describe();
}

} // namespace detail

inline const std::vector<Experiment>& experiments() {
    static const std::vector<Experiment> registry = [] {
        std::vector<Experiment> v;
        v.push_back({"prpd-summable", "Multiple sums with summable weights",
                     "Phi(n,m) over gap-constrained m-tuples with weights D(n) = (shift+n)^exponent converges to "
                     "zeta^m, zeta = sum_{n>=n0} 1/D(n).",
                     {{"exponent", "2"}, {"shift", "1"}, {"n0", "1"}, {"orders", "1,2,3"},
                      {"horizons", "10,100,1000,10000"}, {"tolerance", "0.01"}},
                     detail::run_phi_summable});
        v.push_back({"prpd-rv", "Multiple sums with regularly varying partial sums",
                     "D(n) = scale * n^exponent, S(n) = sum 1/D regularly varying with index tau = 1 - exponent; "
                     "Phi(n,m)/S(n)^m -> lambda_tau^{-(m-1)}. Trend plus a loose band at the largest horizon.",
                     {{"exponent", "0.5"}, {"scale", "1"}, {"orders", "2"}, {"horizons", "1000,10000,100000"},
                      {"tolerance", "0.10"}},
                     detail::run_phi_rv});
        v.push_back(detail::iterated_log_experiment("rzr-i", "i"));
        v.push_back(detail::iterated_log_experiment("rzr-ii", "ii"));
        v.push_back(detail::iterated_log_experiment("rzr-iii", "iii"));
        v.push_back(detail::iterated_log_experiment("rzr-iv", "iv"));
        v.push_back({"thg", "Power-kernel multiple sums at log scale",
                     "sum over 1<=j_1<...<j_k<=n of 1/(j_1 j_2^{1-alpha}(j_2^alpha-j_1^alpha)...) divided by "
                     "(log n)^k tends to prod_{j<k}(j+alpha)/(k! alpha^k). Trend check.",
                     {{"alpha", "2"}, {"orders", "1,2"}, {"horizons", "100,1000,10000"}}, detail::run_thg});
        v.push_back({"thbb-geo", "Geometric limit for a summable distance kernel (exact moments)",
                     "rho(i,j) = D(j-i) with D(n) = (shift+n)^exponent summable: the count converges to "
                     "Geometric(1/(zeta+1)). Exact moments increase to the geometric moments.",
                     {{"exponent", "2"}, {"shift", "1"}, {"orders", "1,2,3"}, {"horizons", "10,100,1000,10000"},
                      {"tolerance", "0.01"}},
                     detail::run_geo_moments});
        v.push_back({"thbb-exp", "Exponential limit for a divergent distance kernel (exact moments)",
                     "rho(i,j) = D(j-i), rho(0,j) = lambda_sigma D(j), D(n) = scale * n^exponent, sigma = 1 - exponent: "
                     "count/S(n) -> Exponential(lambda_sigma). Trend plus a loose band.",
                     {{"exponent", "0.5"}, {"scale", "2"}, {"orders", "1,2"}, {"horizons", "100,1000,10000"},
                      {"tolerance", "0.10"}},
                     detail::run_exp_moments});
        v.push_back({"tha-gamma", "Gamma limit for the power kernel (exact moments)",
                     "rho(0,i) = beta i, rho(i,j) = beta j^{1-alpha}(j^alpha - i^alpha): alpha beta count / log n -> "
                     "Gamma(alpha,1). Log-rate convergence; trend plus a loose band.",
                     {{"alpha", "2"}, {"beta", "1"}, {"orders", "1,2"}, {"horizons", "1000,10000,100000"},
                      {"tolerance", "0.15"}},
                     detail::run_gamma_moments});
        v.push_back({"c3-cutsphere", "Weak cutspheres of Brownian motion in dimension d >= 3",
                     "Level-walk simulation of spheres of radius kb with offset a. Empirical moments of the count "
                     "match exact kernel moments; count/((a/b) log n) -> Gamma(d-2,1) (trend only).",
                     {{"d", "3"}, {"a", "1"}, {"b", "2"}, {"replicates", "10000"}, {"seed", "20240611"},
                      {"horizons", "100,250,500"}},
                     [](const ParamSet& p, ExperimentReport& rep) {
                         detail::require(p.real("d") > 2.0, "d must exceed 2 (transient case)");
                         detail::run_levelwalk(p, rep, ScaleSpec::brownian(p.real("d"), p.real("a"), p.real("b")),
                                               std::nullopt);
                     }});
        v.push_back({"c4-gbm", "Weak cutpoints of geometric Brownian motion",
                     "Level-walk simulation with scale function x^{-(2mu/sigma^2-1)} started at x0 in (0,b). "
                     "Empirical moments match exact kernel moments; count/((a/b) log n) -> Gamma(2mu/sigma^2-1,1).",
                     {{"mu", "1.5"}, {"sigma", "1"}, {"a", "1"}, {"b", "2"}, {"x0", "1"}, {"replicates", "10000"},
                      {"seed", "20240612"}, {"horizons", "100,250,500"}},
                     [](const ParamSet& p, ExperimentReport& rep) {
                         const double mu = p.real("mu"), sigma = p.real("sigma");
                         detail::require(sigma > 0.0 && 2 * mu > sigma * sigma, "need sigma > 0 and 2 mu > sigma^2");
                         const auto spec = ScaleSpec::gbm(mu, sigma, p.real("a"), p.real("b"));
                         const double x0 = p.real("x0");
                         detail::require(x0 > 0.0 && x0 < spec.b, "x0 must lie in (0, b)");
                         detail::run_levelwalk(p, rep, spec, x0);
                     }});
        v.push_back({"thy-gw", "Returns of a critical Galton-Watson process to size 1",
                     "Geometric(1/2) offspring, Y_0 = 1. N_n = #{t <= n : Y_t = 1} converges a.s. to "
                     "Geometric(6/pi^2). Checks: TV distance, exact mean within 4 se, stabilization.",
                     {{"replicates", "100000"}, {"seed", "20240613"}, {"horizons", "1000,5000"},
                      {"tv_tolerance", "0.02"}, {"stabilization_tolerance", "0.005"}},
                     detail::run_gw});
        v.push_back({"thz-bpve-i", "Regenerations of a near-critical BPVE, summable perturbation",
                     "p_t = 1/2 - r_t/4 with r_t = t^{-r_exponent}. I_n/log n -> Exponential(1). Checks: exact mean "
                     "within 4 se and the kernel's distance asymptotics.",
                     {{"r_exponent", "2"}, {"replicates", "50000"}, {"seed", "20240614"},
                      {"horizons", "500,1000,5000"}, {"epsilon", "0.05"}},
                     [](const ParamSet& p, ExperimentReport& rep) { detail::run_bpve(p, rep, false); }});
        v.push_back({"thz-bpve-ii", "Regenerations of a near-critical BPVE, p_t = 1/2 - B/(4t)",
                     "Mean offspring m_t ~ 1 + B/t. I_n/log n -> Gamma(1-B,1). Checks: exact mean within 4 se and "
                     "rho(i,j) ~ j^B (j^{1-B} - i^{1-B})/(1-B).",
                     {{"B", "0.5"}, {"replicates", "50000"}, {"seed", "20240615"}, {"horizons", "500,1000,5000"},
                      {"epsilon", "0.05"}},
                     [](const ParamSet& p, ExperimentReport& rep) { detail::run_bpve(p, rep, true); }});
        return v;
    }();
    return registry;
}

inline const Experiment& find_experiment(const std::string& id) {
    for (const auto& e : experiments())
        if (e.id == id)
            return e;
    throw config_error("unknown experiment '" + id + "'");
}

// Effective parameters: defaults overlaid with the config. Unknown keys are errors.
inline ParamSet resolve_params(const Experiment& x, const ParamSet& config) {
    ParamSet p;
    for (const auto& [k, v] : x.defaults)
        p.values[k] = v;
    for (const auto& [k, v] : config.values) {
        if (k == "experiment" || k == "output" || k == "time_budget") {
            p.values[k] = v;
            continue;
        }
        if (!p.has(k))
            throw config_error("unknown key '" + k + "' for experiment " + x.id);
        p.values[k] = v;
    }
    p.values["experiment"] = x.id;
    if (!p.has("output"))
        p.values["output"] = x.id + ".json";
    return p;
}

inline ExperimentReport run_experiment(const ParamSet& config) {
    const auto& x = find_experiment(config.text("experiment"));
    ExperimentReport rep;
    rep.id = x.id;
    rep.title = x.title;
    rep.config = resolve_params(x, config);
    if (const char* env = std::getenv("LIMITLAB_SEED"); env && rep.config.has("seed"))
        rep.config.values["seed"] = env;

    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    rep.started_at = buf;

    const auto t0 = std::chrono::steady_clock::now();
    x.run(rep.config, rep);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// Writes <output>.json and the CSV table next to it (same stem, .csv).
inline std::pair<std::filesystem::path, std::filesystem::path> write_report(const ExperimentReport& rep) {
    const std::filesystem::path json_path = rep.config.text("output");
    auto csv_path = json_path;
    csv_path.replace_extension(".csv");
    if (json_path.has_parent_path())
        std::filesystem::create_directories(json_path.parent_path());
    const std::string json_body = report_to_json(rep).dump(2) + "\n";
    const std::string csv_body = rows_to_csv(rep.rows);
    detail::write_atomically(csv_path, csv_body);
    detail::write_atomically(json_path, json_body);
    return {json_path, csv_path};
}

} // namespace limitlab
