#include "kppfront/errors.hpp"
#include "kppfront/traveling_wave.hpp"

#include "doctest.h"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <map>
#include <sstream>

using namespace kpp;
using doctest::Approx;

namespace {
const WaveProfile& fisher_wave(double c) {
    static std::map<double, WaveProfile> cache;
    auto it = cache.find(c);
    if (it == cache.end()) it = cache.emplace(c, solve_profile(KppNonlinearity::fisher(), c)).first;
    return it->second;
}

// independent bisection on the tabulated profile
double bisect_level(const WaveProfile& W, double m) {
    double lo = W.z_min(), hi = W.z_max();
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (W(mid) > m ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}
}  // namespace

TEST_CASE("critical Fisher tail normalisation") {
    const auto& W = fisher_wave(2.0);
    CHECK(W.normalization() == TailNormalization::Critical);
    const double z1 = W.z_max(), z0 = z1 - 0.1 * (z1 - W.z_min());
    for (double z = z0; z <= z1; z += (z1 - z0) / 50.0) {
        const double r = W(z) / (z * std::exp(-z));
        CHECK(r >= 0.98);
        CHECK(r <= 1.02);
    }
}

TEST_CASE("supercritical profile solves the ODE") {
    const auto f = KppNonlinearity::fisher();
    const auto& W = fisher_wave(2.5);
    CHECK(W.normalization() == TailNormalization::Supercritical);
    CHECK(profile_ode_residual(W, f) <= 1e-6);
    // independent residual by fourth-order central differences of the interpolant
    const double h = 0.02;
    double worst = 0.0;
    for (double z = W.z_min() + 1.0; z < W.z_max() - 1.0; z += 0.37) {
        const double u2 = (-W(z + 2 * h) + 16 * W(z + h) - 30 * W(z) + 16 * W(z - h) - W(z - 2 * h)) / (12 * h * h);
        const double u1 = (-W(z + 2 * h) + 8 * W(z + h) - 8 * W(z - h) + W(z - 2 * h)) / (12 * h);
        worst = std::max(worst, std::abs(u2 + 2.5 * u1 + f(W(z))));
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("monotone profile in (0, 1)") {
    for (double c : {2.0, 2.5, 3.0}) {
        const auto& W = fisher_wave(c);
        for (std::size_t i = 0; i < W.U().size(); ++i) {
            CHECK(W.U()[i] > 0.0);
            CHECK(W.U()[i] < 1.0);
            if (i > 0) CHECK(W.U()[i] < W.U()[i - 1]);
        }
    }
}

TEST_CASE("profile_inverse") {
    for (double c : {2.0, 2.5, 3.0}) {
        const auto& W = fisher_wave(c);
        CHECK(W(profile_inverse(W, 0.5)) == Approx(0.5).epsilon(1e-9));
        CHECK(profile_inverse(W, W(0.0)) == Approx(0.0).scale(1.0).epsilon(1e-8));
    }
    const auto& W = fisher_wave(2.0);
    CHECK(profile_inverse(W, 0.5) == Approx(bisect_level(W, 0.5)).epsilon(1e-9));
    const double dz = W.z()[1] - W.z()[0];
    CHECK(std::abs(profile_inverse(W, 1.0 - 1.01 * W.eps_tail()) - W.z_min()) <= 4 * dz);
    CHECK_THROWS_AS(profile_inverse(W, 1.0), RangeError);
    CHECK_THROWS_AS(profile_inverse(W, 0.0), RangeError);
}

TEST_CASE("speeds below c* are rejected") {
    CHECK_THROWS_AS(solve_profile(KppNonlinearity::fisher(), 1.99), DomainError);
}

TEST_CASE("translation-quotient uniqueness") {
    const auto& A = fisher_wave(2.5);
    WaveGrid g;
    g.dz = 0.005;
    const auto B = solve_profile(KppNonlinearity::fisher(), 2.5, g);
    auto dist = [&](double s) {
        double d = 0.0;
        for (double z = -15.0; z < 30.0; z += 0.05) d = std::max(d, std::abs(A(z) - B(z + s)));
        return d;
    };
    const auto best = boost::math::tools::brent_find_minima(dist, -0.5, 0.5, 40);
    CHECK(best.second <= 1e-4);
}

TEST_CASE("decay rate decreases with speed") {
    double prev = 2.0;
    for (double c = 2.0; c <= 6.0; c += 0.25) {
        const double lam = lambda_of_c(c, 1.0).lambda;
        CHECK(lam < prev);
        prev = lam;
    }
}

TEST_CASE("export_text header and columns") {
    std::ostringstream os;
    fisher_wave(2.5).export_text(os);
    const auto s = os.str();
    CHECK(s.find("c=") != std::string::npos);
    CHECK(s.find('\n') != std::string::npos);
}
