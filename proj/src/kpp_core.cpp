#include "kppfront/kpp_core.hpp"

#include "kppfront/errors.hpp"

#include <algorithm>
#include <boost/math/special_functions/fpclassify.hpp>  // before pchip, which calls isnan unqualified
#include <boost/math/interpolators/pchip.hpp>
#include <cmath>
#include <fmt/format.h>
#include <memory>

namespace kpp {

namespace {

constexpr int kSampleGrid = 10000;
constexpr double kSampleLo = 1e-6;

double sample_point(int i) {
    // log-uniform near 0 so the quadratic regime of g is resolved, uniform toward 1
    const double a = static_cast<double>(i) / (kSampleGrid - 1);
    const double lo = std::log(kSampleLo);
    const double s_log = std::exp(lo + a * (0.0 - lo));
    const double s_lin = kSampleLo + a * (1.0 - kSampleLo);
    return 0.5 * (s_log + s_lin);
}

}  // namespace

KppNonlinearity::KppNonlinearity(std::string name, Fn f01, double fprime0, double fprime1)
    : name_(std::move(name)), f_(std::move(f01)), fprime0_(fprime0), fprime1_(fprime1) {
    if (!(fprime0_ > 0.0) || !std::isfinite(fprime0_))
        throw DomainError(fmt::format("nonlinearity '{}': f'(0) must be positive, got {}", name_, fprime0_));
    if (std::isnan(fprime1_)) {
        const double h = 1e-5;
        // second-order one-sided difference at s = 1
        fprime1_ = (3.0 * f_(1.0) - 4.0 * f_(1.0 - h) + f_(1.0 - 2.0 * h)) / (2.0 * h);
    }
    if (std::abs(f_(0.0)) > kCheckTol || std::abs(f_(1.0)) > kCheckTol)
        throw DomainError(fmt::format("nonlinearity '{}': need f(0)=f(1)=0, got f(0)={:.3e}, f(1)={:.3e}",
                                      name_, f_(0.0), f_(1.0)));

    c_g_ = std::numeric_limits<double>::infinity();
    C_g_ = 0.0;
    strong_kpp_ = true;
    double prev_ratio = std::numeric_limits<double>::infinity();
    double prev_s = 0.0, prev_f = 0.0;
    lipschitz_ = std::max(std::abs(fprime0_), std::abs(fprime1_));
    for (int i = 0; i < kSampleGrid; ++i) {
        const double s = sample_point(i);
        const double fs = f_(s);
        if (!(fs > 0.0) && s < 1.0 - 1e-9)
            throw DomainError(fmt::format("nonlinearity '{}' is not KPP: f({:.6g}) = {:.3e} <= 0", name_, s, fs));
        if (fs > fprime0_ * s + kCheckTol)
            throw DomainError(fmt::format("nonlinearity '{}' is not KPP: f({:.6g}) = {:.6g} exceeds f'(0)s", name_, s, fs));
        const double g = fprime0_ * s - fs;
        const double q = g / (s * s);
        c_g_ = std::min(c_g_, q);
        C_g_ = std::max(C_g_, q);
        const double ratio = fs / s;
        if (ratio > prev_ratio + kCheckTol) strong_kpp_ = false;
        prev_ratio = ratio;
        if (i > 0) lipschitz_ = std::max(lipschitz_, std::abs(fs - prev_f) / (s - prev_s));
        prev_s = s;
        prev_f = fs;
    }
    const double h = 1e-3;
    const double q1 = residual_g(*this, h) / (h * h);
    const double q2 = residual_g(*this, h / 2) / (h * h / 4);
    quad_coeff_ = 2.0 * q2 - q1;
    if (!(c_g_ > 0.0))
        throw DomainError(fmt::format("nonlinearity '{}': g(s)/s^2 not bounded below by a positive constant", name_));
}

KppNonlinearity KppNonlinearity::fisher(double rate) {
    return KppNonlinearity(rate == 1.0 ? "fisher" : fmt::format("fisher*{}", rate),
                           [rate](double s) { return rate * s * (1.0 - s); }, rate, -rate);
}

KppNonlinearity KppNonlinearity::tabulated(std::string name, std::vector<double> s,
                                           std::vector<double> f, double fprime0) {
    if (s.size() < 4 || s.size() != f.size() || s.front() != 0.0 || s.back() != 1.0)
        throw DomainError("tabulated nonlinearity needs >= 4 nodes spanning [0,1]");
    auto interp = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
        std::move(s), std::move(f), fprime0);
    return KppNonlinearity(std::move(name), [interp](double x) { return (*interp)(x); }, fprime0);
}

double KppNonlinearity::operator()(double s) const {
    if (s <= 0.0) return fprime0_ * s;
    if (s >= 1.0) return fprime1_ * (s - 1.0);
    return f_(s);
}

double residual_g(const KppNonlinearity& f, double s) {
    if (s <= 0.0) return 0.0;
    return f.fprime0() * s - f(s);
}

SpeedPair lambda_of_c(double c, double fprime0) {
    if (!(fprime0 > 0.0)) throw DomainError("f'(0) must be positive");
    const double ls = std::sqrt(fprime0);
    const double cs = 2.0 * ls;
    if (c < cs * (1.0 - 1e-14))
        throw DomainError(fmt::format("speed {} is below the minimal speed c* = {}", c, cs));
    const double disc = std::max(0.0, c * c - 4.0 * fprime0);
    const double root = std::sqrt(disc);
    // product of the roots is f'(0); dividing avoids cancellation in (c - root)/2
    const double lambda = disc == 0.0 ? ls : 2.0 * fprime0 / (c + root);
    return SpeedPair{c, lambda, ls, cs, root};
}

double speed_of_lambda(double lambda, double fprime0) {
    if (!(lambda > 0.0) || lambda > std::sqrt(fprime0) * (1.0 + 1e-14))
        throw DomainError(fmt::format("decay rate {} outside (0, sqrt(f'(0))]", lambda));
    return lambda + fprime0 / lambda;
}

double r_weighted(const KppNonlinearity& f, double weight, double speed,
                  double t, double x, double s) {
    if (s <= 0.0) return 0.0;
    const double E = weight * (x - speed * t);
    if (E > kExponentCap) return std::exp(std::log(f.C_g()) - E + 2.0 * std::log(s));
    if (E < -kExponentCap) {
        // u = e^{-E} s is far above 1 where g is affine
        return (f.fprime0() - f.fprime1()) * s + f.fprime1() * std::exp(E);
    }
    const double u = s * std::exp(-E);
    if (u < 1e-5) {
        // avoid the cancellation in f'(0)u - f(u); g(u)/u^2 is smooth at 0
        return std::exp(E) * f.quad_coeff() * u * u;
    }
    return std::exp(E) * residual_g(f, u);
}

}  // namespace kpp
