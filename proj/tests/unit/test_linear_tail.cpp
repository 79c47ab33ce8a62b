#include "kppfront/errors.hpp"
#include "kppfront/linear_tail.hpp"

#include "doctest.h"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace kpp;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

// p(t, y) for an odd datum by tanh-sinh over (0, inf): G(y - z) - G(y + z)
double oracle_heat(const std::function<double(double)>& w, double t, double y) {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto g = [&](double z) {
        const double a = std::exp(-(y - z) * (y - z) / (4 * t));
        const double b = std::exp(-(y + z) * (y + z) / (4 * t));
        return (a - b) * w(z);
    };
    const double s = std::sqrt(t);
    const double lo = std::max(0.0, y - 20 * s), hi = y + 20 * s;
    double v = 0.0;
    // split at the kink of the H1 datum
    if (lo < 1.0) v += ts.integrate(g, lo, std::min(1.0, hi));
    if (hi > 1.0) v += ts.integrate(g, std::max(1.0, lo), hi);
    return v / std::sqrt(4 * kPi * t);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
}  // namespace

TEST_CASE("heat-invariant data") {
    const auto lin = TailInitialData::linear();
    const auto cub = TailInitialData::cubic();
    for (double t : {0.5, 10.0, 1e3})
        for (double y : {0.1, 1.0, 7.5, 40.0}) {
            CHECK(rel(heat_eval_quadrature(lin, t, y), y) < 1e-9);
            CHECK(rel(heat_eval_quadrature(cub, t, y), y * y * y + 6 * t * y) < 1e-9);
        }
    // the H1 k = 0 datum is exactly linear as well
    CHECK(rel(heat_eval_quadrature(TailInitialData::h1(0.0), 50.0, 3.0), 3.0) < 1e-9);
}

TEST_CASE("H1 k = -2 against an independent quadrature") {
    const auto w0 = TailInitialData::h1(-2.0);
    const double p = heat_eval_quadrature(w0, 100.0, 5.0);
    const double q = oracle_heat([&](double z) { return w0.base(z); }, 100.0, 5.0);
    CHECK(rel(p, q) < 1e-8);
}

TEST_CASE("series matches quadrature in the diffusive zone") {
    for (double k : {-3.0, -1.0, 2.0})
        for (double t : {100.0, 1e4}) {
            const auto w0 = TailInitialData::h1(k);
            const double y = 0.5 * std::sqrt(t);
            CHECK(rel(heat_eval_series(w0, t, y), heat_eval_quadrature(w0, t, y)) < 1e-6);
        }
    CHECK(rel(heat_eval_series(TailInitialData::linear(), 100.0, 3.0), 3.0) < 1e-10);
    CHECK_THROWS_AS(heat_eval_series(TailInitialData::h1(0.0), 100.0, 20.0), DomainError);
}

TEST_CASE("k = -3 ratio with the logarithm is stable") {
    const auto w0 = TailInitialData::h1(-3.0);
    std::vector<double> r;
    for (double t : {1e4, 1e5, 1e6}) {
        const double y = 0.5 * std::sqrt(t);
        r.push_back(heat_eval_quadrature(w0, t, y) / (y * std::exp(-y * y / (4 * t)) * std::pow(t, -1.5) * std::log(t)));
    }
    CHECK(std::isfinite(r.back()));
    CHECK(rel(r[2], r[1]) < 0.1);
    CHECK(rel(r[2], r[1]) < rel(r[1], r[0]));
}

TEST_CASE("cubic predictor") {
    AsymptoticConstants c;
    c.varpi = 6.0;
    for (double t : {1e2, 1e3, 1e4})
        for (double f : {0.05, 0.3, 1.0}) {
            const double y = f * std::sqrt(t);
            const double pred = predict_asymptotic(c, TailFamily::Cubic, 2.0, {t, y, Regime::Diffusive});
            const double exact = y * y * y + 6 * t * y;
            // predictor carries e^{-y^2/4t}; the heat polynomial is y t (6 + y^2/t)
            CHECK(rel(pred * std::exp(y * y / (4 * t)), exact) <= y * y / (6 * t) + 1e-12);
        }
    const auto e = estimate_prefactor(TailInitialData::cubic(), log_grid(100, 1e4), [](double) { return 1.0; });
    CHECK(e.constants.varpi == Approx(6.0).epsilon(0.01));
}

TEST_CASE("ballistic prefactor of the linear datum") {
    const double rho = 1.5;
    PrefactorOptions opt;
    opt.regime = Regime::Ballistic;
    opt.rho = rho;
    const auto e = estimate_prefactor(TailInitialData::h2(1.0), log_grid(1e3, 1e5), [&](double t) { return rho * t + 0.5 * std::sqrt(t); }, opt);
    CHECK(e.constants.lambda_big * std::exp(-1.0 / 16.0) == Approx(rho).epsilon(0.01));
}

TEST_CASE("k = 0 prefactor against the Gamma series") {
    // sum Gamma(n + 3/2) 2^{2n+2} / (2n+1)! xi^n / (2 sqrt pi) with xi = y^2/4t; here xi = 1/16
    double s = 0.0;
    for (int n = 0; n < 30; ++n)
        s += boost::math::tgamma(n + 1.5) * std::pow(2.0, 2 * n + 2) / boost::math::factorial<double>(2 * n + 1) *
             std::pow(1.0 / 16.0, n);
    s /= 2.0 * std::sqrt(kPi);
    const auto e = estimate_prefactor(TailInitialData::h1(0.0), log_grid(100, 1e4), [](double t) { return 0.5 * std::sqrt(t); });
    CHECK(e.constants.varpi == Approx(s).epsilon(0.02));
    CHECK(s == Approx(std::exp(1.0 / 16.0)).epsilon(1e-12));
}

TEST_CASE("k = -3 prefactor drift") {
    const auto e = estimate_prefactor(TailInitialData::h1(-3.0), log_grid(1e4, 1e6), [](double t) { return 0.5 * std::sqrt(t); },
                                      PrefactorOptions{Regime::Diffusive, 0.0, 1e4});
    CHECK(e.max_drift < 0.10);
}

TEST_CASE("cosine bump moment and perturbed prefactor") {
    const double M = 0.3, T = 50.0, alpha = 0.45, beta = 0.12;
    const auto b = chi0(M, T, alpha, beta - 1.5);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double q = ts.integrate([&](double z) { return z * b(z); }, 0.5 * kPi * b.L, b.hi());
    CHECK(b.first_moment() == Approx(q).epsilon(1e-9));
    const double varpi = 2.0;
    CHECK(perturbed_prefactor(varpi, b) == Approx(varpi - M * std::sqrt(kPi) * std::pow(T, beta + 2 * alpha - 1.5)).epsilon(1e-12));
    CHECK_THROWS_AS(perturbed_prefactor(1e-6, b), DomainError);
}

TEST_CASE("advected evaluation is a change of variables") {
    const auto lin = TailInitialData::linear();
    CHECK(advected_eval(lin, 2.0, 10.0, 25.0) == Approx(5.0));
    const auto cub = TailInitialData::cubic();
    CHECK(advected_eval(cub, 1.0, 4.0, 6.0) == Approx(8.0 + 6 * 4 * 2));
    const auto w = TailInitialData::h1(-2.0);
    CHECK(advected_eval(w, 2.0, 100.0, 205.0) == Approx(heat_eval_quadrature(w, 100.0, 5.0)).epsilon(1e-14));
}

TEST_CASE("bounded-time envelope") {
    const std::vector<double> ts{0.1, 0.5, 1.0, 2.0, 5.0};
    std::vector<double> ys;
    for (double y = 1.0; y < 60.0; y *= 1.3) ys.push_back(y);
    const auto e0 = bounded_time_envelope(TailInitialData::linear(), 5.0, ts, ys);
    CHECK(e0.C1 < 1.0);
    CHECK(e0.C2 > 1.0 - 1e-9);
    CHECK(e0.contained);
    const auto e1 = bounded_time_envelope(TailInitialData::h1(1.0), 5.0, ts, ys);
    CHECK(e1.contained);
    for (double t : ts)
        for (double y : ys) {
            if (y < std::sqrt(t)) continue;
            const double p = heat_eval_quadrature(TailInitialData::h1(1.0), t, y);
            CHECK(p >= e1.C1 * y * y * (1 - 1e-9));
            CHECK(p <= e1.C2 * y * y * (1 + 1e-9));
        }
    for (double t : ts)
        for (double y : ys) CHECK(heat_eval_quadrature(TailInitialData::h1(-1.0), t, y) <= 1.0 + 1e-12);
    CHECK_THROWS_AS(bounded_time_envelope(TailInitialData::h1(-2.0), 5.0, ts, ys), DomainError);
}

TEST_CASE("oddness and positivity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lt(-1.0, 4.0), ly(-2.0, 2.5), kk(-5.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const double t = std::pow(10.0, lt(rng)), y = std::pow(10.0, ly(rng)), k = kk(rng);
        const auto w0 = TailInitialData::h1(k);
        const double p = heat_eval_quadrature(w0, t, y);
        CHECK(p > 0.0);
        CHECK(rel(heat_eval_quadrature(w0, t, -y), -p) < 1e-10);
    }
}

TEST_CASE("comparison sandwich") {
    for (double k : {-1.0, -0.5, 0.0, 0.5, 1.0, 2.0})
        for (double t : {0.1, 1.0, 10.0, 100.0, 1e3})
            for (double y : {0.2, 1.0, 3.0, 10.0, 30.0, 100.0}) {
                const double p = heat_eval_quadrature(TailInitialData::h1(k), t, y);
                const double w = y < 1.0 ? y : std::pow(y, k + 1.0);
                // the H1 datum equals z on [0, 1]; z^{k+1} and z coincide at 1
                if (k <= 0.0 && y >= 1.0) CHECK(p <= w * (1 + 1e-9));
                if (k >= 0.0 && y >= 1.0) CHECK(p >= w * (1 - 1e-9));
            }
}

TEST_CASE("compact perturbation decay") {
    const auto b = chi0(1.0, 20.0, 0.45, 0.0);
    auto pb = [&](double t, double y) {
        return heat_eval_free([&](double z) { return b(z); }, t, y, b.lo(), b.hi(), {-0.5 * kPi * b.L, 0.0, 0.5 * kPi * b.L});
    };
    // fit C on one lattice, confirm on a shifted one
    double C = 0.0;
    for (double t : {1.0, 10.0, 100.0})
        for (double y = std::sqrt(t); y < std::sqrt(t) + 60; y += 3.0)
            C = std::max(C, std::abs(pb(t, y)) * std::exp(y / std::sqrt(1 + t)));
    CHECK(std::isfinite(C));
    for (double t : {2.0, 30.0, 300.0})
        for (double y = std::sqrt(t) + 1.3; y < std::sqrt(t) + 60; y += 3.7)
            CHECK(std::abs(pb(t, y)) <= 1.5 * C * std::exp(-y / std::sqrt(1 + t)));
}

TEST_CASE("ballistic negligibility of the bump") {
    const auto b = chi0(1.0, 20.0, 0.45, 0.0);
    auto ratio = [&](double t, double y) {
        const double p = heat_eval_free([&](double z) { return b(z); }, t, y, b.lo(), b.hi(), {-0.5 * kPi * b.L, 0.0, 0.5 * kPi * b.L});
        return std::abs(p) * std::sqrt(t) * std::exp(y * y / (4 * t));
    };
    const double rho = 1.5;
    double early = 0.0, late = 0.0;
    for (double t : log_grid(100, 1e3, 4))
        for (double s = 0.0; s <= 1.0; s += 0.25) early = std::max(early, ratio(t, rho * t + s * std::sqrt(t)));
    for (double t : log_grid(1e3, 1e4, 4))
        for (double s = 0.0; s <= 1.0; s += 0.25) late = std::max(late, ratio(t, rho * t + s * std::sqrt(t)));
    CHECK(std::isfinite(early));
    CHECK(late <= 1.5 * early);
}

TEST_CASE("perturbed datum stays nonnegative or is rejected") {
    const auto w0 = TailInitialData::h1(-4.0);
    CHECK_NOTHROW(w0.with_bump(chi0(1e-9, 1e3, 0.49, 0.0)));
    CHECK_THROWS_AS(w0.with_bump(chi0(10.0, 1e3, 0.49, 0.0)), DomainError);
    const auto w = w0.with_bump(chi0(1e-9, 1e3, 0.49, 0.0));
    for (double x : {0.5, 3.0, 30.0}) CHECK(w(-x) == Approx(-w(x)).epsilon(1e-14));
}

TEST_CASE("ratio CSV header") {
    const auto e = estimate_prefactor(TailInitialData::h1(-1.0), log_grid(100, 1e3), [](double t) { return 0.5 * std::sqrt(t); });
    std::ostringstream os;
    write_ratio_csv(os, e, [&](double t, double y) {
        return predict_asymptotic(e.constants, TailFamily::H1, -1.0, {t, y, Regime::Diffusive});
    });
    CHECK(os.str().rfind("#", 0) == 0);
}
