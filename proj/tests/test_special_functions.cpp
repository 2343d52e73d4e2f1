#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ugwb/special_functions.hpp"

using Catch::Approx;
using namespace ugwb;

TEST_CASE("laguerre small cases") {
    CHECK(laguerre(0, 3.7, 5.0) == 1.0);
    CHECK(laguerre(1, 0.0, 2.0) == Approx(-1.0).epsilon(1e-15));
    CHECK(laguerre(2, 1.0, 1.0) == Approx(0.5).epsilon(1e-14));
    CHECK(oracle::laguerre_sum(2, 1.0, 1.0) == Approx(0.5).epsilon(1e-14));
}

TEST_CASE("laguerre recurrence matches explicit sum for integer alpha") {
    for (int n = 0; n <= 12; ++n)
        for (int k = 0; k <= 12; ++k)
            for (double xi : {0.0, 0.3, 1.0, 2.5, 7.0}) {
                const double ref = oracle::laguerre_sum(n, k, xi);
                const double scale = std::max(1.0, std::fabs(ref));
                CHECK(std::fabs(laguerre(n, k, xi) - ref) <= 1e-12 * scale);
            }
}

TEST_CASE("laguerre recurrence matches explicit sum on random inputs") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> nd(0, 20);
    std::uniform_real_distribution<double> ad(0.0, 10.0), xd(0.0, 50.0);
    for (int t = 0; t < 500; ++t) {
        const int n = nd(rng);
        const double a = ad(rng), x = xd(rng);
        const double ref = oracle::laguerre_sum(n, a, x);
        CHECK(std::fabs(laguerre(n, a, x) - ref) <= 1e-9 * std::fabs(ref));
    }
}

TEST_CASE("jbracket") {
    CHECK(jbracket(std::array<double, 2>{0.0, 0.0}) == 1.0);
    CHECK(jbracket(std::array<double, 2>{3.0, 4.0}) == Approx(std::sqrt(26.0)).epsilon(1e-15));
    const double big = jbracket(std::array<double, 2>{1e8, 0.0});
    CHECK(std::isfinite(big));
    CHECK(std::fabs(big - std::hypot(1.0, 1e8)) <= 1e-12 * 1e8);
    CHECK(jbracket(1e300) == Approx(1e300).epsilon(1e-15));
    for (double r : {0.0, 1e-5, 0.5, 10.0}) CHECK(jbracket(r) >= 1.0);
}

TEST_CASE("gauss-laguerre rules are exact on low-degree moments") {
    for (int m : {8, 16, 32}) {
        for (double alpha : {0.0, 2.0}) {
            const auto rule = gauss_laguerre(m, alpha);
            REQUIRE(rule.nodes.size() == static_cast<std::size_t>(m));
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                CHECK(rule.weights[i] > 0.0);
                if (i > 0) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
            }
            for (int p = 0; p <= 2 * m - 1; ++p) {
                // int xi^{p+alpha} e^{-xi} = Gamma(p + alpha + 1)
                const double exact = std::lgamma(p + alpha + 1.0);
                const double got = rule.apply([p](double x) { return std::pow(x, p); });
                CHECK(std::fabs(std::log(got) - exact) < 1e-12 * std::max(1.0, std::fabs(exact)) + 1e-12);
            }
        }
    }
}

TEST_CASE("generalized laguerre orthogonality") {
    for (int k = 0; k <= 10; ++k) {
        const auto rule = gauss_laguerre(24, k);
        for (int n = 0; n <= 5; ++n)
            for (int m = 0; m <= 5; ++m) {
                const double v = rule.apply([&](double x) { return laguerre(n, k, x) * laguerre(m, k, x); });
                const double norm = std::exp(std::lgamma(n + k + 1.0) - std::lgamma(n + 1.0));
                if (n == m) CHECK(v == Approx(norm).epsilon(1e-11));
                else CHECK(std::fabs(v) <= 1e-10 * norm);
            }
    }
}

TEST_CASE("upper incomplete gamma") {
    CHECK(gamma_upper(0, 2.0) == Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(gamma_upper(1, 2.0) == Approx(3.0 * std::exp(-2.0)).epsilon(1e-15));
    CHECK(gamma_upper(4, 0.0) == Approx(24.0).epsilon(1e-14));
}

TEST_CASE("adaptive integration on exponential integrands") {
    auto r1 = integrate_adaptive_exp([](double x) { return std::exp(-x); }, 1e-10);
    CHECK(std::fabs(r1.value - 1.0) <= 1e-10);
    CHECK(r1.err_estimate + r1.tail_bound <= 1e-10);
    auto r2 = integrate_adaptive([](double x) { return x * std::exp(-x); }, 1e-10,
                                 [](double x) { return gamma_upper(1, x); });
    CHECK(std::fabs(r2.value - 1.0) <= 1e-10);
    CHECK(r2.tail_bound <= 1e-11);
}

TEST_CASE("adaptive integration matches a refined Simpson oracle") {
    auto f = [](double x) { return std::exp(-std::sqrt(1.0 + x)) * std::exp(-x); };
    auto res = integrate_adaptive_exp(f, 1e-8, std::exp(-1.0));
    double prev = oracle::simpson(f, 0.0, 60.0, 1000);
    double cur = prev;
    for (int panels = 2000; panels <= 64000; panels *= 2) {
        cur = oracle::simpson(f, 0.0, 60.0, panels);
        if (std::fabs(cur - prev) < 1e-12) break;
        prev = cur;
    }
    CHECK(std::fabs(res.value - cur) <= 1e-8);
    CHECK(res.value == Approx(0.263).margin(1e-3));
}

TEST_CASE("adaptive integration records the composite rule on request") {
    AdaptiveOptions opts;
    opts.keep_rule = true;
    auto res = integrate_adaptive_exp([](double x) { return std::exp(-x); }, 1e-9, 1.0, opts);
    CHECK(res.rule.kind == QuadratureKind::adaptive_composite);
    REQUIRE(res.rule.nodes.size() > 2);
    for (std::size_t i = 1; i < res.rule.nodes.size(); ++i) CHECK(res.rule.nodes[i] > res.rule.nodes[i - 1]);
    CHECK(res.rule.apply([](double x) { return std::exp(-x); }) == Approx(res.value).epsilon(1e-13));
}

TEST_CASE("adaptive integration reports exhausted budgets") {
    AdaptiveOptions opts;
    opts.max_evaluations = 200;
    auto wiggly = [](double x) { return std::sin(200.0 * x) * std::exp(-x); };
    CHECK_THROWS_AS(integrate_adaptive_exp(wiggly, 1e-12, 1.0, opts), NonConvergence);
    CHECK_THROWS_AS(integrate_adaptive([](double) { return 1.0; }, 1e-6, [](double) { return 1.0; }), NonConvergence);
    CHECK_THROWS_AS(integrate_adaptive_exp([](double x) { return std::exp(-x); }, 0.0), std::invalid_argument);
}
