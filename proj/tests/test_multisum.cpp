#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "limitlab/multisum.hpp"
#include "oracles.hpp"

using namespace limitlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const double pi = std::numbers::pi;

std::vector<WeightSequence> oracle_weights(std::int64_t n0) {
    return {weights_power(1.0, 1.0, n0), weights_power(2.0, 1.0, n0), weights_power(0.5, 2.0, n0),
            weights_shifted_power(2.0, 1.0, n0)};
}
} // namespace

TEST_CASE("phi small examples", "[multisum]") {
    CHECK_THAT(phi(weights_power(1.0), 3, 2).value, WithinRel(2.0, 1e-15));
    CHECK_THAT(phi(weights_shifted_power(2.0), 3, 1).value, WithinRel(0.25 + 1.0 / 9 + 1.0 / 16, 1e-15));
    auto r = phi(weights_power(1.0, 1.0, 2), 3, 2);
    CHECK(r.value == 0.0);
    CHECK(r.constrained);
    CHECK_THROWS_AS(phi(weights_power(1.0), 0, 1), std::invalid_argument);
}

TEST_CASE("u_sum small examples", "[multisum]") {
    CHECK_THAT(u_sum(1, 0, 1, 2.0, 2).value, WithinRel(1.25, 1e-15));
    CHECK_THAT(u_sum(2, 0, 1, 2.0, 3).value, WithinRel(1.5, 1e-15));
    CHECK(u_sum(2, 0, 1, 2.0, 1).value == 0.0);
    CHECK_THROWS_AS(u_sum(1, 1, 1, 2.0, 10), std::domain_error);
    // m = 1 weights with the smallest admissible gap
    const double direct = 1.0 / lambda_weight(1, 2.0, 2) + 1.0 / lambda_weight(1, 2.0, 3);
    CHECK_THAT(u_sum(1, 1, 2, 2.0, 3).value, WithinRel(direct, 1e-15));
}

TEST_CASE("phi agrees with brute-force enumeration", "[multisum]") {
    for (std::int64_t n0 : {1, 2, 3}) {
        for (const auto& w : oracle_weights(n0)) {
            const auto table = phi_table(w, 12, 4);
            for (std::int64_t n = 1; n <= 12; ++n) {
                for (unsigned m = 1; m <= 4; ++m) {
                    const double ref = oracle::phi_enumerate(w.generator, n0, n, m);
                    INFO(w.name << " n0=" << n0 << " n=" << n << " m=" << m);
                    CHECK_THAT(phi(w, n, m).value, WithinRel(ref, 1e-12) || WithinAbs(ref, 1e-300));
                    CHECK_THAT(table[m][static_cast<std::size_t>(n)], WithinRel(ref, 1e-12) || WithinAbs(ref, 1e-300));
                }
            }
        }
    }
}

TEST_CASE("phi is nondecreasing in n", "[multisum]") {
    for (const auto& w : oracle_weights(1)) {
        const auto table = phi_table(w, 200, 3);
        for (unsigned m = 1; m <= 3; ++m)
            for (std::size_t n = 1; n < table[m].size(); ++n)
                CHECK(table[m][n] >= table[m][n - 1]);
    }
}

TEST_CASE("phi satisfies the first-index convolution identity", "[multisum]") {
    // condition on j_1 and shift the remaining indices down by j_1
    const auto w = weights_power(0.5, 2.0, 2);
    for (std::int64_t n : {9, 15}) {
        for (unsigned m = 2; m <= 3; ++m) {
            double rhs = 0.0;
            for (std::int64_t j = w.n0; j <= n - static_cast<std::int64_t>(m - 1) * w.n0; ++j)
                rhs += oracle::phi_enumerate(w.generator, w.n0, n - j, m - 1) / w(j);
            CHECK_THAT(phi(w, n, m).value, WithinRel(rhs, 1e-12));
        }
    }
}

TEST_CASE("psi_general small examples", "[multisum]") {
    const auto gw = kernel_distance(weights_shifted_power(2.0));
    CHECK_THAT(psi_general(gw, 2, 1), WithinRel(13.0 / 36.0, 1e-15));
    CHECK_THAT(psi_general(gw, 2, 2), WithinRel(1.0 / 16.0, 1e-15));
    CHECK(psi_general(gw, 2, 3) == 0.0);
}

TEST_CASE("psi with a distance kernel equals phi without gap", "[multisum]") {
    for (const auto& w : oracle_weights(1)) {
        const auto K = kernel_distance(w);
        const auto psi = psi_table(K, 40, 4);
        for (std::int64_t n : {1, 7, 23, 40})
            for (unsigned m = 1; m <= 4; ++m)
                CHECK_THAT(psi(n, m), WithinRel(phi(w, n, m).value, 1e-12) || WithinAbs(0.0, 1e-300));
    }
}

TEST_CASE("psi_table is independent of the worker count", "[multisum]") {
    const auto K = kernel_power(2.0, 1.0);
    const auto a = psi_table(K, 300, 3, 1);
    const auto b = psi_table(K, 300, 3, 4);
    for (unsigned q = 1; q <= 3; ++q)
        CHECK(a.cumulative[q] == b.cumulative[q]);
}

TEST_CASE("predictions: constant, regular variation, power", "[multisum]") {
    const double z = pi * pi / 6 - 1;
    auto p1 = predict(regime::Summable{z}, 3);
    CHECK(p1.scaling.kind == ScalingKind::constant);
    CHECK_THAT(p1.coefficient, WithinRel(z * z * z, 1e-14));

    auto p2 = predict(regime::RegularlyVarying{0.5}, 2);
    CHECK(p2.scaling.kind == ScalingKind::partial_sum_power);
    CHECK(p2.scaling.exponent == 2.0);
    CHECK_THAT(p2.coefficient, WithinRel(pi / 4, 1e-12));
    CHECK_THAT(predict(regime::RegularlyVarying{0.0}, 4).coefficient, WithinRel(1.0, 1e-15));

    auto p3 = predict(regime::Power{1.0, 1.0}, 2);
    CHECK(p3.scaling.kind == ScalingKind::log_power);
    CHECK_THAT(p3.coefficient, WithinRel(1.0, 1e-14));
    CHECK_THAT(predict(regime::Power{2.0, 1.0}, 2).coefficient, WithinRel(0.75, 1e-14));
    CHECK_THAT(predict(regime::PowerMoment{2.0, 1.0}, 2).coefficient, WithinRel(1.5, 1e-14));
    CHECK_THAT(predict(regime::PowerMoment{1.0, 1.0}, 3).coefficient, WithinRel(6.0, 1e-14));
}

TEST_CASE("predictions for iterated-log weights", "[multisum]") {
    auto i = predict(regime::IteratedLog{0, 2.0, 1}, 2);
    CHECK(i.scaling.kind == ScalingKind::constant);
    CHECK_THAT(i.coefficient, WithinAbs(std::pow(pi * pi / 6, 2), 1e-9));

    auto ii = predict(regime::IteratedLog{1, 1.0, 2}, 3);
    CHECK(ii.scaling.kind == ScalingKind::iterated_log_power);
    CHECK(ii.scaling.depth == 2);
    CHECK(ii.scaling.exponent == 3.0);
    CHECK(ii.coefficient == 1.0);

    auto iii = predict(regime::IteratedLog{1, 0.5, 2}, 2);
    CHECK(iii.scaling.depth == 1);
    CHECK_THAT(iii.scaling.exponent, WithinRel(1.0, 1e-15));
    CHECK_THAT(iii.coefficient, WithinRel(4.0, 1e-15));

    auto iv = predict(regime::IteratedLog{0, 0.5, 1}, 2);
    CHECK(iv.scaling.kind == ScalingKind::n_power);
    CHECK_THAT(iv.coefficient, WithinRel(pi, 1e-12));
    CHECK_THROWS_AS(predict(regime::IteratedLog{0, -0.5, 1}, 2), std::domain_error);
}

TEST_CASE("two predictors agree on the sqrt weight", "[multisum]") {
    // D(n) = sqrt(n): S(n) ~ 2 sqrt(n), so Phi(n,2)/n -> 4 / lambda_{1/2}
    const auto rv = predict(regime::RegularlyVarying{0.5}, 2);
    const auto iv = predict(regime::IteratedLog{0, 0.5, 1}, 2);
    CHECK_THAT(rv.coefficient * 4.0, WithinAbs(iv.coefficient, 1e-10));
    CHECK_THAT(iv.coefficient, WithinAbs(pi, 1e-10));
}

TEST_CASE("polynomial-regime sums approach their prediction", "[multisum]") {
    const auto pred = predict(regime::IteratedLog{0, 0.5, 1}, 2);
    double last = 1e9;
    for (std::int64_t n : {100, 1000, 10000}) {
        const double ratio = u_sum(2, 0, 1, 0.5, n).value / pred.predicted(static_cast<double>(n));
        const double err = std::fabs(ratio - 1.0);
        CHECK(err < last);
        last = err;
    }
    CHECK(last < 0.02);
}
