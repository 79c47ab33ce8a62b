#include "kppfront/linear_tail.hpp"

#include "kppfront/errors.hpp"

#include <algorithm>
#include <boost/math/special_functions/fpclassify.hpp>  // before pchip, which calls isnan unqualified
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <ostream>

namespace kpp {

namespace {

constexpr double kPi = std::numbers::pi;
// exp(-14^2/4) ~ 5e-22: the Gaussian window half-width in units of sqrt(t)
constexpr double kWindow = 14.0;

struct QuadSum {
    double value = 0.0;
    double err = 0.0;
    double l1 = 0.0;
};

template <class F>
void add_panels(QuadSum& acc, F&& f, double a, double b, std::vector<double> breaks) {
    if (!(b > a)) return;
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = std::max(a, breaks[i]);
        const double hi = std::min(b, breaks[i + 1]);
        if (!(hi > lo)) continue;
        // map the panel to [0, 1]: boost's error estimate carries an absolute floor
        // tied to the endpoint magnitudes, which swamps narrow panels far from 0
        // and divide by a sampled magnitude, since the error floor is absolute as well.
        // Asking for much below 1e-10 only accumulates rounding noise in the estimate.
        const double w = hi - lo;
        double mag = 0.0;
        for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) mag = std::max(mag, std::abs(f(lo + w * s)));
        if (!(mag > 0.0) || !std::isfinite(mag)) mag = 1.0;
        auto g = [&](double s) { return f(lo + w * s) / mag; };
        double err = 0.0, l1 = 0.0;
        const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, 15, 1e-10,
                                                                                        &err, &l1);
        acc.value += w * mag * v;
        acc.err += w * mag * err;
        acc.l1 += w * mag * l1;
    }
}

void check_accuracy(const QuadSum& q, double t, double y) {
    if (q.err > kQuadTol * q.l1 + 1e-300)
        throw AccuracyError(fmt::format("heat quadrature did not converge at t={:g}, y={:g}: error {:.3g} "
                                        "against mass {:.3g}",
                                        t, y, q.err, q.l1));
}

}  // namespace

const char* to_string(TailFamily f) {
    switch (f) {
        case TailFamily::H1: return "H1";
        case TailFamily::H2: return "H2";
        case TailFamily::Linear: return "linear";
        case TailFamily::Cubic: return "cubic";
        case TailFamily::Restart: return "restart";
        case TailFamily::Custom: return "custom";
    }
    return "?";
}

// ---- bumps -----------------------------------------------------------------

double CosineBump::operator()(double x) const {
    const double u = (x - center) / L;
    if (u >= kPi / 2 && u <= 1.5 * kPi) return amplitude * std::cos(u);
    if (odd && -u >= kPi / 2 && -u <= 1.5 * kPi) return -amplitude * std::cos(u);
    return 0.0;
}

double CosineBump::lo() const { return odd ? center - 1.5 * kPi * L : center + 0.5 * kPi * L; }
double CosineBump::hi() const { return center + 1.5 * kPi * L; }

double CosineBump::first_moment() const {
    if (center != 0.0) throw DomainError("first moment is defined for bumps centred at 0");
    // [u sin u + cos u] from pi/2 to 3pi/2
    return -2.0 * kPi * amplitude * L * L;
}

CosineBump chi0(double M, double T, double alpha, double power) {
    return CosineBump{M * std::pow(T, power), std::pow(T, alpha), 0.0, true};
}

double perturbed_prefactor(double varpi, const CosineBump& b) {
    const double v = varpi + b.first_moment() / std::sqrt(4.0 * kPi);
    if (!(v > 0.0))
        throw DomainError(fmt::format("perturbed prefactor {:.6g} is not positive; shrink the bump", v));
    return v;
}

// ---- initial data ------------------------------------------------------------

TailInitialData TailInitialData::h1(double k) {
    TailInitialData d;
    d.family_ = TailFamily::H1;
    d.exponent_ = k;
    d.base_ = std::make_shared<const std::function<double(double)>>(
        [k](double z) { return z < 1.0 ? z : std::pow(z, k + 1.0); });
    d.kinks_ = {1.0};
    return d;
}

TailInitialData TailInitialData::h2(double nu) {
    TailInitialData d = h1(nu - 1.0);
    d.family_ = TailFamily::H2;
    d.exponent_ = nu;
    return d;
}

TailInitialData TailInitialData::linear() {
    TailInitialData d;
    d.family_ = TailFamily::Linear;
    d.exponent_ = 0.0;
    d.base_ = std::make_shared<const std::function<double(double)>>([](double z) { return z; });
    return d;
}

TailInitialData TailInitialData::cubic() {
    TailInitialData d;
    d.family_ = TailFamily::Cubic;
    d.exponent_ = 2.0;
    d.base_ = std::make_shared<const std::function<double(double)>>([](double z) { return z * z * z; });
    return d;
}

TailInitialData TailInitialData::restart(std::vector<double> z, std::vector<double> w, double decay_power,
                                         double exponent) {
    if (z.size() < 4 || z.size() != w.size() || z.front() != 0.0)
        throw DomainError("restart data needs at least 4 samples starting at z = 0");
    const double zn = z.back(), wn = w.back();
    auto interp = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(z),
                                                                                          std::move(w));
    TailInitialData d;
    d.family_ = TailFamily::Restart;
    d.exponent_ = exponent;
    d.base_ = std::make_shared<const std::function<double(double)>>([interp, zn, wn, decay_power](double s) {
        if (s >= zn) return wn * std::pow(s / zn, decay_power);
        return (*interp)(s);
    });
    d.kinks_ = {1.0, zn};
    return d;
}

TailInitialData TailInitialData::custom(std::string, std::function<double(double)> w, double exponent,
                                        std::vector<double> kinks) {
    TailInitialData d;
    d.family_ = TailFamily::Custom;
    d.exponent_ = exponent;
    d.base_ = std::make_shared<const std::function<double(double)>>(std::move(w));
    d.kinks_ = std::move(kinks);
    return d;
}

TailInitialData TailInitialData::with_bump(const CosineBump& b, bool check_nonnegative) const {
    TailInitialData d = *this;
    d.bumps_.push_back(b);
    if (check_nonnegative) {
        const double lo = std::max(0.0, b.lo()), hi = b.hi();
        for (int i = 0; i <= 4000 && hi > lo; ++i) {
            const double z = lo + (hi - lo) * i / 4000.0;
            if (z <= 0.0) continue;
            const double v = d(z);
            if (v < -1e-14 * std::abs(b.amplitude))
                throw DomainError(fmt::format("perturbed datum is negative at z={:.6g} ({:.3g}); the bump "
                                              "amplitude must stay below the base data",
                                              z, v));
        }
    }
    return d;
}

double TailInitialData::diffusive_k() const {
    return family_ == TailFamily::H2 ? exponent_ - 1.0 : exponent_;
}

double TailInitialData::base(double z) const { return (*base_)(z); }

double TailInitialData::operator()(double x) const {
    double v = x >= 0.0 ? base(x) : -base(-x);
    for (const auto& b : bumps_) v += b(x);
    return v;
}

// ---- quadrature ----------------------------------------------------------------

double heat_eval_free(const std::function<double(double)>& w, double t, double y, double lo, double hi,
                      const std::vector<double>& breaks) {
    if (!(t > 0.0)) throw DomainError("heat evaluation needs t > 0");
    const double s = std::sqrt(t);
    const double a = std::max(lo, y - kWindow * s);
    const double b = std::min(hi, y + kWindow * s);
    if (!(b > a)) return 0.0;
    const double norm = 1.0 / std::sqrt(4.0 * kPi * t);
    // integrate over d = z - y so the Gaussian never sees a cancelled difference
    auto f = [&](double d) { return std::exp(-d * d / (4.0 * t)) * w(y + d); };
    std::vector<double> br;
    for (double z : breaks) br.push_back(z - y);
    br.push_back(0.0);
    QuadSum q;
    add_panels(q, f, a - y, b - y, std::move(br));
    check_accuracy(q, t, y);
    return norm * q.value;
}

double heat_eval_quadrature(const TailInitialData& w0, double t, double y) {
    if (!(t > 0.0)) throw DomainError("heat evaluation needs t > 0");
    double p = 0.0;
    const double ya = std::abs(y);
    if (ya > 0.0) {
        const double s = std::sqrt(t);
        const double a = std::max(0.0, ya - kWindow * s);
        const double b = ya + kWindow * s;
        auto f = [&](double d) {
            const double z = ya + d;
            return std::exp(-d * d / (4.0 * t)) * (-std::expm1(-ya * z / t)) * w0.base(z);
        };
        std::vector<double> br;
        for (double z : w0.kinks()) br.push_back(z - ya);
        br.push_back(0.0);
        QuadSum q;
        add_panels(q, f, a - ya, b - ya, std::move(br));
        check_accuracy(q, t, y);
        p = std::copysign(q.value / std::sqrt(4.0 * kPi * t), y);
    }
    for (const auto& bump : w0.bumps()) {
        std::vector<double> br{bump.center - 0.5 * kPi * bump.L, bump.center + 0.5 * kPi * bump.L,
                               bump.center};
        p += heat_eval_free([&bump](double z) { return bump(z); }, t, y, bump.lo(), bump.hi(), br);
    }
    return p;
}

double advected_eval(const TailInitialData& w0, double frame_speed, double t, double x) {
    return heat_eval_quadrature(w0, t, x - frame_speed * t);
}

// ---- series ----------------------------------------------------------------------

namespace {

// log of the upper incomplete Gamma(s, x) for x > 0 and any real s
double log_upper_gamma(double s, double x) {
    namespace bm = boost::math;
    if (s > 0.0) return bm::lgamma(s) + std::log(bm::gamma_q(s, x));
    // climb to s0 in (0, 1] (or 0 itself), then recur down with
    // Gamma(s, x) = (x^s e^{-x} - Gamma(s+1, x)) / (-s)
    const int steps = static_cast<int>(std::ceil(-s));
    const double s0 = s + steps;
    const double g0 = s0 == 0.0 ? bm::expint(1, x) : bm::tgamma(s0, x);
    double g = g0;
    for (double a = s0 - 1.0; a >= s - 1e-12; a -= 1.0) g = (std::pow(x, a) * std::exp(-x) - g) / (-a);
    return std::log(g);
}

// int_0^1 z^m e^{-a z^2} dz for a <= 1/4 by the power series of the exponential
double lower_moment(double m, double a) {
    double sum = 0.0, term = 1.0;
    for (int j = 0; j < 200; ++j) {
        const double c = term / (m + 2.0 * j + 1.0);
        sum += c;
        if (std::abs(c) < 1e-17 * std::abs(sum)) break;
        term *= -a / (j + 1.0);
    }
    return sum;
}

// log int_1^inf z^m e^{-z^2/4t} dz = m ln 2 + (m+1)/2 ln t + ln Gamma((m+1)/2, 1/4t)
double log_upper_moment(double m, double t) {
    return m * std::log(2.0) + 0.5 * (m + 1.0) * std::log(t) + log_upper_gamma(0.5 * (m + 1.0), 0.25 / t);
}

double log_full_moment(double m, double t) {
    return m * std::log(2.0) + 0.5 * (m + 1.0) * std::log(t) + boost::math::lgamma(0.5 * (m + 1.0));
}

double log_add(double la, double lb) {
    if (la < lb) std::swap(la, lb);
    return la + std::log1p(std::exp(lb - la));
}

}  // namespace

double heat_eval_series(const TailInitialData& w0, double t, double y) {
    if (t < 1.0 || std::abs(y) > std::sqrt(t) * (1.0 + 1e-12))
        throw DomainError(fmt::format("series evaluation is for the diffusive zone t >= 1, |y| <= sqrt t; "
                                      "got t={:g}, y={:g}",
                                      t, y));
    const auto fam = w0.family();
    if (fam == TailFamily::Restart || fam == TailFamily::Custom)
        throw DomainError("series evaluation needs closed-form moments; use quadrature for this datum");
    for (const auto& b : w0.bumps())
        if (b.center != 0.0 || !b.odd) throw DomainError("series evaluation needs bumps odd about 0");
    if (y == 0.0) return 0.0;

    const double a = 0.25 / t;
    const double kp1 = w0.diffusive_k() + 1.0;
    const double lr = 2.0 * std::log(std::abs(y) / (2.0 * t));

    // bump moments: int z^{2n+1} e^{-z^2/4t} bump(z) dz over z > 0, scaled by z_ref^{2n+1}
    auto bump_moment = [&](const CosineBump& b, int n, double& log_scale) {
        const double zr = b.hi();
        log_scale = (2.0 * n + 1.0) * std::log(zr);
        auto f = [&](double z) { return std::pow(z / zr, 2 * n + 1) * std::exp(-a * z * z) * b(z); };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, std::max(0.0, 0.5 * kPi * b.L),
                                                                             b.hi(), 15, 1e-13);
    };

    double sum = 0.0;
    for (int n = 0; n < 100000; ++n) {
        const double m = 2.0 * n + 1.0;  // power of z from sinh, before the datum
        double lm;
        switch (fam) {
            case TailFamily::Linear: lm = log_full_moment(m + 1.0, t); break;
            case TailFamily::Cubic: lm = log_full_moment(m + 3.0, t); break;
            default: lm = log_add(std::log(lower_moment(m + 1.0, a)), log_upper_moment(m + kp1, t)); break;
        }
        const double lc = n * lr - boost::math::lgamma(2.0 * n + 2.0);
        double term = std::exp(lc + lm);
        for (const auto& b : w0.bumps()) {
            double ls = 0.0;
            const double v = bump_moment(b, n, ls);
            term += v * std::exp(lc + ls);
        }
        sum += term;
        if (n > 2 && std::abs(term) < 1e-14 * std::abs(sum)) break;
    }
    return y * std::exp(-y * y / (4.0 * t)) * std::pow(t, -1.5) * sum / std::sqrt(4.0 * kPi);
}

// ---- predictors ----------------------------------------------------------------

void LinearSolutionQuery::validate() const {
    if (!(t > 0.0)) throw DomainError("query needs t > 0");
    const double s = std::sqrt(t), tol = 1e-12 * (1.0 + std::abs(y));
    switch (regime) {
        case Regime::Diffusive:
            if (std::abs(y) > s + tol)
                throw DomainError(fmt::format("diffusive zone needs |y| <= sqrt t (y={:g}, t={:g})", y, t));
            break;
        case Regime::Outer:
            if (y < std::max(s, 1.0) - tol)
                throw DomainError(fmt::format("outer zone needs y >= max(sqrt t, 1) (y={:g}, t={:g})", y, t));
            break;
        case Regime::Ballistic: {
            const double d = y - rho * t;
            if (d < -tol || d > s + tol)
                throw DomainError(
                    fmt::format("ballistic zone needs 0 <= y - rho t <= sqrt t (y={:g}, t={:g}, rho={:g})", y, t,
                                rho));
            break;
        }
    }
}

namespace {

double shape(TailFamily family, double exponent, const LinearSolutionQuery& q) {
    const double k = family == TailFamily::H2 ? exponent - 1.0 : exponent;
    switch (q.regime) {
        case Regime::Diffusive: {
            const double g = q.y * std::exp(-q.y * q.y / (4.0 * q.t));
            if (k > -3.0 + 1e-12) return g * std::pow(q.t, 0.5 * k);
            if (k > -3.0 - 1e-12) return g * std::pow(q.t, -1.5) * std::log(q.t);
            return g * std::pow(q.t, -1.5);
        }
        case Regime::Outer: return std::pow(q.y, k + 1.0);
        case Regime::Ballistic: {
            const double d = q.y - q.rho * q.t;
            return std::pow(q.t, k + 1.0) * std::exp(-d * d / (4.0 * q.t));
        }
    }
    return 0.0;
}

}  // namespace

double predict_asymptotic(const AsymptoticConstants& c, TailFamily family, double exponent,
                          const LinearSolutionQuery& q, double t_min) {
    q.validate();
    if (q.t < t_min)
        throw DomainError(fmt::format("asymptotic predictor used at t={:g} below t_min={:g}", q.t, t_min));
    switch (q.regime) {
        case Regime::Diffusive: return c.varpi_sharp.value_or(c.varpi) * shape(family, exponent, q);
        case Regime::Outer: return shape(family, exponent, q);
        case Regime::Ballistic: return c.lambda_big * shape(family, exponent, q);
    }
    return 0.0;
}

std::vector<double> log_grid(double t0, double t1, int per_decade) {
    if (!(t0 > 0.0 && t1 > t0) || per_decade < 1) throw DomainError("log grid needs 0 < t0 < t1");
    const int n = static_cast<int>(std::lround(std::log10(t1 / t0) * per_decade));
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = t0 * std::pow(t1 / t0, static_cast<double>(i) / n);
    return g;
}

PrefactorEstimate estimate_prefactor(const TailInitialData& w0, const std::vector<double>& t_grid,
                                     const std::function<double(double)>& y_rule, const PrefactorOptions& opt) {
    if (t_grid.size() < 2 || !std::is_sorted(t_grid.begin(), t_grid.end()))
        throw DomainError("prefactor fit needs an increasing time grid");
    PrefactorEstimate e;
    for (double t : t_grid) {
        LinearSolutionQuery q{t, y_rule(t), opt.regime, opt.rho};
        q.validate();
        if (t < opt.t_min) throw DomainError(fmt::format("t={:g} below t_min={:g}", t, opt.t_min));
        const double p = heat_eval_quadrature(w0, t, q.y);
        e.t.push_back(t);
        e.y.push_back(q.y);
        e.p.push_back(p);
        e.ratio.push_back(p / shape(w0.family(), w0.exponent(), q));
    }
    const double tl = e.t.back();
    double acc = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < e.t.size(); ++i)
        if (e.t[i] >= tl / 10.0 * (1.0 - 1e-12)) {
            acc += e.ratio[i];
            ++cnt;
        }
    const double avg = acc / cnt;
    if (opt.regime == Regime::Ballistic) e.constants.lambda_big = avg;
    else if (w0.has_bumps()) e.constants.varpi_sharp = avg;
    else e.constants.varpi = avg;

    // ratio at t/10 by linear interpolation in ln t
    auto ratio_at = [&](double t) {
        auto it = std::lower_bound(e.t.begin(), e.t.end(), t * (1.0 - 1e-12));
        const std::size_t j = static_cast<std::size_t>(it - e.t.begin());
        if (j == 0) return e.ratio.front();
        const double w = std::log(t / e.t[j - 1]) / std::log(e.t[j] / e.t[j - 1]);
        return std::clamp(w, 0.0, 1.0) * e.ratio[j] + (1.0 - std::clamp(w, 0.0, 1.0)) * e.ratio[j - 1];
    };
    for (std::size_t i = 0; i < e.t.size(); ++i) {
        if (e.t[i] < e.t.front() * 10.0 * (1.0 - 1e-12)) continue;
        const double d = std::abs(e.ratio[i] - ratio_at(e.t[i] / 10.0)) / std::abs(e.ratio[i]);
        e.decade_drift.push_back(d);
        e.max_drift = std::max(e.max_drift, d);
    }
    if (tl >= e.t.front() * 100.0 * (1.0 - 1e-12)) {
        e.last_two_decades_drift = std::abs(e.ratio.back() - ratio_at(tl / 100.0)) / std::abs(e.ratio.back());
        if (e.last_two_decades_drift > opt.warn_drift) {
            e.converged = false;
            e.warning = fmt::format("ratio drifts by {:.1f}% over the last two decades", 100 * e.last_two_decades_drift);
        }
    } else {
        e.warning = "fewer than two decades; drift not assessed";
    }
    return e;
}

Envelope bounded_time_envelope(const TailInitialData& w0, double t0, const std::vector<double>& ts,
                               const std::vector<double>& ys) {
    const double k = w0.diffusive_k();
    if (k < -1.0) throw DomainError("bounded-time envelope needs k >= -1");
    if (!(t0 > 0.0)) throw DomainError("bounded-time envelope needs t0 > 0");
    Envelope env;
    env.C1 = 0.5 * (1.0 - std::exp(-1.0 / t0));
    env.min_ratio = INFINITY;
    env.max_ratio = 0.0;
    for (double t : ts) {
        if (!(t > 0.0 && t <= t0)) throw DomainError("envelope sample time outside (0, t0]");
        for (double y : ys) {
            if (y < std::max(std::sqrt(t), 1.0)) continue;
            const double r = heat_eval_quadrature(w0, t, y) / std::pow(y, k + 1.0);
            env.min_ratio = std::min(env.min_ratio, r);
            env.max_ratio = std::max(env.max_ratio, r);
        }
    }
    env.C2 = env.max_ratio;
    env.contained = env.min_ratio >= env.C1 && env.min_ratio <= env.max_ratio;
    return env;
}

void write_ratio_csv(std::ostream& os, const PrefactorEstimate& e,
                     const std::function<double(double, double)>& predictor) {
    os << "# kppfront linear_tail ratios v1\n";
    os << "t,y,p,predictor,ratio\n";
    for (std::size_t i = 0; i < e.t.size(); ++i) {
        const double pr = predictor(e.t[i], e.y[i]);
        os << fmt::format("{:.10g},{:.10g},{:.12g},{:.12g},{:.12g}\n", e.t[i], e.y[i], e.p[i], pr, e.p[i] / pr);
    }
}

}  // namespace kpp
