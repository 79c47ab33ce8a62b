#include "kppfront/errors.hpp"
#include "kppfront/kpp_core.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace kpp;
using doctest::Approx;

namespace {
// u (1 - u)(1 + 0.2 u): f'(0) = 1 by hand, and (1 - s)(1 + 0.2 s) <= 1 on (0, 1)
KppNonlinearity cubic_kpp() {
    return KppNonlinearity("cubic", [](double u) { return u * (1.0 - u) * (1.0 + 0.2 * u); }, 1.0);
}
}  // namespace

TEST_CASE("residual_g examples") {
    const auto f = KppNonlinearity::fisher();
    CHECK(residual_g(f, 0.3) == Approx(0.09).epsilon(1e-14));
    CHECK(residual_g(f, 0.0) == 0.0);
    CHECK(residual_g(cubic_kpp(), 0.0) == 0.0);
    // 0.5 - 0.5 * 0.5 * 1.1, differentiated by hand
    CHECK(residual_g(cubic_kpp(), 0.5) == Approx(0.225).epsilon(1e-12));
}

TEST_CASE("lambda_of_c examples") {
    auto a = lambda_of_c(2.5, 1.0);
    CHECK(a.lambda == Approx(0.5).epsilon(1e-14));
    CHECK(a.mu == Approx(1.5).epsilon(1e-14));
    auto b = lambda_of_c(2.0, 1.0);
    CHECK(b.lambda == Approx(1.0));
    CHECK(b.mu == 0.0);
    CHECK(b.critical());
    CHECK(lambda_of_c(3.0, 1.0).lambda == Approx((3.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-14));
    CHECK_THROWS_AS(lambda_of_c(1.9, 1.0), DomainError);
}

TEST_CASE("speed pair identities") {
    for (double f0 : {0.5, 1.0, 2.0})
        for (double c : {2.0 * std::sqrt(f0), 3.0, 4.5, 10.0}) {
            const auto sp = lambda_of_c(c, f0);
            CHECK(std::abs(sp.lambda * sp.lambda - c * sp.lambda + f0) < 1e-12);
            CHECK(std::abs(2.0 * sp.lambda + sp.mu - c) < 1e-12);
            CHECK(sp.critical() == (std::abs(sp.lambda - sp.lambda_star) < 1e-12));
        }
}

TEST_CASE("lambda round trip") {
    for (double f0 : {0.5, 1.0, 3.0}) {
        const double ls = std::sqrt(f0);
        for (int i = 1; i <= 50; ++i) {
            const double lam = ls * i / 50.0;
            const auto sp = lambda_of_c(speed_of_lambda(lam, f0), f0);
            CHECK(std::abs(sp.lambda - lam) < 1e-12 * std::max(1.0, 1.0 / lam));
        }
    }
}

TEST_CASE("r_leading_edge examples") {
    const auto f = KppNonlinearity::fisher();
    CHECK(r_leading_edge(f, 1.0, 2.0, 3.0, 6.0, 0.4) == Approx(0.16).epsilon(1e-14));
    CHECK(r_leading_edge(f, 1.0, 2.0, 3.0, 6.0, -1.0) == 0.0);
    CHECK(r_leading_edge(f, 1.0, 2.0, 0.0, 2.0, 1.0) == Approx(std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("r equals g on the reference line") {
    const auto f = cubic_kpp();
    for (double s = 0.05; s < 3.0; s += 0.05) CHECK(r_leading_edge(f, 1.0, 2.0, 7.0, 14.0, s) == Approx(residual_g(f, s)));
}

TEST_CASE("exponent cap keeps far-field values finite") {
    const auto f = KppNonlinearity::fisher();
    const double v = r_leading_edge(f, 1.0, 2.0, 0.0, -800.0, 0.5);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
}

TEST_CASE("KPP sampled inequalities") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(1e-6, 1.0 - 1e-6);
    for (const auto& f : {KppNonlinearity::fisher(), cubic_kpp(), KppNonlinearity::fisher(2.0)}) {
        CHECK(f(0.0) == 0.0);
        CHECK(std::abs(f(1.0)) < 1e-14);
        for (int i = 0; i < 1000; ++i) {
            const double s = U(rng);
            CHECK(f(s) > 0.0);
            CHECK(f(s) <= f.fprime0() * s + 1e-15);
            const double g = residual_g(f, s);
            CHECK(g >= f.c_g() * s * s * (1 - 1e-9));
            CHECK(g <= f.C_g() * s * s * (1 + 1e-9));
        }
    }
}

TEST_CASE("linear extension outside [0, 1]") {
    const auto f = KppNonlinearity::fisher();
    CHECK(f(-0.5) == Approx(-0.5));
    CHECK(f(1.5) == Approx(f.fprime1() * 0.5));
    CHECK(f.fprime1() == Approx(-1.0).epsilon(1e-6));
    CHECK(residual_g(f, -2.0) == 0.0);
}

TEST_CASE("strong KPP flag") {
    CHECK(KppNonlinearity::fisher().strong_kpp());
    CHECK(cubic_kpp().strong_kpp());
    // f(s)/s = (1 - s)((1 - 2s)^2 + 0.05) dips near 1/2 and rises again
    const KppNonlinearity dip("dip", [](double u) { return u * (1 - u) * ((1 - 2 * u) * (1 - 2 * u) + 0.05); }, 1.05);
    CHECK_FALSE(dip.strong_kpp());
}

TEST_CASE("non-KPP reaction is rejected") {
    // bistable-like: f'(0) understates f near 0
    auto bad = [] { KppNonlinearity("bad", [](double u) { return u * (1.0 - u) * (1.0 + 2.0 * u); }, 1.0); };
    CHECK_THROWS_AS(bad(), DomainError);
}

TEST_CASE("tabulated nonlinearity") {
    std::vector<double> s, v;
    for (int i = 0; i <= 100; ++i) {
        s.push_back(i / 100.0);
        v.push_back(s.back() * (1.0 - s.back()));
    }
    const auto f = KppNonlinearity::tabulated("tab-fisher", s, v, 1.0);
    CHECK(f(0.37) == Approx(0.37 * 0.63).epsilon(1e-4));
    CHECK(f.fprime0() == 1.0);
}
