#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/zeta.hpp>
#include <boost/rational.hpp>

#include <cmath>
#include <numbers>

#include "limitlab/special.hpp"

using namespace limitlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("gamma_fn values and domain", "[special]") {
    CHECK_THAT(gamma_fn(1.0), WithinRel(1.0, 1e-14));
    CHECK_THAT(gamma_fn(5.0), WithinRel(24.0, 1e-14));
    CHECK_THAT(gamma_fn(0.5), WithinRel(std::sqrt(std::numbers::pi), 1e-13));
    CHECK_THROWS_AS(gamma_fn(0.0), std::domain_error);
    CHECK_THROWS_AS(gamma_fn(-1.5), std::domain_error);
}

TEST_CASE("gamma_fn recurrence", "[special]") {
    for (double x = 0.5; x <= 20.5; x += 1.0)
        CHECK_THAT(gamma_fn(x + 1.0), WithinRel(x * gamma_fn(x), 1e-10));
}

TEST_CASE("lambda_sigma", "[special]") {
    CHECK(lambda_sigma(0.0) == 1.0);
    CHECK_THAT(lambda_sigma(1.0), WithinAbs(2.0, 1e-12));
    CHECK_THAT(lambda_sigma(0.5), WithinRel(4.0 / std::numbers::pi, 1e-12));
    // the unsimplified form Gamma(1+2s)/(s Gamma(s) Gamma(1+s))
    for (double s : {0.1, 0.3, 0.7, 0.9}) {
        const double direct = std::tgamma(1 + 2 * s) / (s * std::tgamma(s) * std::tgamma(1 + s));
        CHECK_THAT(lambda_sigma(s), WithinRel(direct, 1e-12));
    }
    CHECK_THAT(lambda_sigma(1e-3), WithinAbs(1.0, 1e-2));
    CHECK_THROWS_AS(lambda_sigma(-0.1), std::domain_error);
    CHECK_THROWS_AS(lambda_sigma(1.1), std::domain_error);
}

TEST_CASE("script_O thresholds", "[special]") {
    CHECK(script_O(0) == 1);
    CHECK(script_O(1) == 2);
    CHECK(script_O(2) == 3);
    CHECK(script_O(3) == 16);
    CHECK(script_O(4) == 3814280);
    CHECK_THROWS_AS(script_O(5), std::overflow_error);
    for (unsigned m = 0; m <= 3; ++m) {
        const auto n = script_O(m);
        CHECK(iterated_log(m, static_cast<double>(n)) > 0.0);
        CHECK_FALSE(iterated_log(m, static_cast<double>(n - 1)) > 0.0);
    }
}

TEST_CASE("lambda_weight", "[special]") {
    CHECK_THAT(lambda_weight(0, 2.0, 3), WithinRel(9.0, 1e-15));
    CHECK_THAT(lambda_weight(1, 1.0, 3), WithinRel(3.0 * std::log(3.0), 1e-15));
    CHECK(lambda_weight(0, 0.0, 1) == 1.0);
    CHECK_THAT(lambda_weight(2, 0.5, 20),
               WithinRel(20.0 * std::log(20.0) * std::sqrt(std::log(std::log(20.0))), 1e-14));
    CHECK_THROWS_AS(lambda_weight(1, 1.0, 1), std::domain_error);
    CHECK_THROWS_AS(lambda_weight(2, 1.0, 2), std::domain_error);
}

TEST_CASE("zeta_tail against closed forms", "[special]") {
    const double z2 = std::numbers::pi * std::numbers::pi / 6.0;
    auto t1 = zeta_tail(0, 2.0, 1);
    CHECK(t1.truncation_bound <= 1e-10);
    CHECK_THAT(t1.value, WithinAbs(z2, 1e-10));

    auto t2 = zeta_tail(0, 2.0, 2);
    CHECK_THAT(t2.value, WithinAbs(z2 - 1.0, 1e-10));

    auto t3 = zeta_tail(0, 3.0, 1, 1e-10);
    CHECK(t3.truncation_bound <= 1e-10);
    CHECK_THAT(t3.value, WithinAbs(boost::math::zeta(3.0), 1e-10));

    for (double s : {1.5, 2.5, 4.0}) {
        auto t = zeta_tail(0, s, 3);
        const double ref = boost::math::zeta(s) - 1.0 - std::pow(2.0, -s);
        CHECK(std::fabs(t.value - ref) <= t.truncation_bound + 1e-13);
    }
}

TEST_CASE("zeta_tail with iterated logs is bracketed by brute force", "[special]") {
    // partial sum to N plus integral bounds: sum_{i>=N} f(i) lies in [int_N^inf f, int_{N-1}^inf f]
    const unsigned m = 1;
    const double s = 2.0;
    const std::int64_t n0 = 2, N = 2'000'000;
    CompensatedSum acc;
    for (std::int64_t i = n0; i < N; ++i)
        acc.add(1.0 / lambda_weight(m, s, i));
    const double lo = acc.value() + 1.0 / std::log(static_cast<double>(N));
    const double hi = acc.value() + 1.0 / std::log(static_cast<double>(N - 1));
    auto t = zeta_tail(m, s, n0);
    CHECK(t.truncation_bound <= 1e-10);
    CHECK(t.value >= lo - 1e-10);
    CHECK(t.value <= hi + 1e-10);
}

TEST_CASE("zeta_tail shift identity", "[special]") {
    for (unsigned m : {0u, 1u, 2u}) {
        const std::int64_t n0 = script_O(m) + 2;
        for (double s : {1.5, 2.0, 3.0}) {
            auto a = zeta_tail(m, s, n0);
            auto b = zeta_tail(m, s, n0 + 1);
            const double lhs = a.value;
            const double rhs = b.value + 1.0 / lambda_weight(m, s, n0);
            CHECK(std::fabs(lhs - rhs) <= a.truncation_bound + b.truncation_bound + 1e-14);
        }
    }
}

TEST_CASE("zeta_tail errors", "[special]") {
    CHECK_THROWS_AS(zeta_tail(0, 1.0, 1), nonconvergent_series);
    CHECK_THROWS_AS(zeta_tail(0, 0.5, 1), std::domain_error);
    CHECK_THROWS_AS(zeta_tail(1, 2.0, 1), std::domain_error);
}

TEST_CASE("gamma_moment", "[special]") {
    CHECK(gamma_moment(1.0, 3) == 6.0);
    CHECK_THAT(gamma_moment(0.5, 2), WithinRel(0.75, 1e-15));
    CHECK(gamma_moment(2.7, 0) == 1.0);
    CHECK_THROWS_AS(gamma_moment(0.0, 2), std::domain_error);

    // exact recurrence with rational arithmetic
    using Q = boost::rational<long long>;
    for (Q a : {Q(1, 2), Q(3, 4), Q(2), Q(7, 3)})
        for (unsigned k = 0; k < 8; ++k)
            CHECK(gamma_moment(a, k + 1) == gamma_moment(a, k) * (Q(static_cast<int>(k)) + a));

    // agrees with Gamma(k+a)/Gamma(a)
    for (unsigned k = 0; k < 10; ++k)
        CHECK_THAT(gamma_moment(1.3, k), WithinRel(std::tgamma(k + 1.3) / std::tgamma(1.3), 1e-12));
}
