#include "kppfront/barrier_check.hpp"

#include "kppfront/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fmt/format.h>
#include <future>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

namespace kpp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLadderTop = 4.0 / 25.0;

bool restart_kind(BarrierKind k) { return k == BarrierKind::H1UpperRestart || k == BarrierKind::H1LowerRestart; }
bool h2_kind(BarrierKind k) { return k == BarrierKind::H2Upper || k == BarrierKind::H2LowerZ; }

}  // namespace

const char* to_string(BarrierKind k) {
    switch (k) {
        case BarrierKind::H1Upper: return "H1-upper";
        case BarrierKind::H1Lower: return "H1-lower";
        case BarrierKind::H1UpperRestart: return "H1-upper-restart";
        case BarrierKind::H1LowerRestart: return "H1-lower-restart";
        case BarrierKind::H2Upper: return "H2-upper";
        case BarrierKind::H2LowerZ: return "H2-lower-z";
    }
    return "?";
}

BarrierKind barrier_kind_from_string(const std::string& s) {
    for (auto k : {BarrierKind::H1Upper, BarrierKind::H1Lower, BarrierKind::H1UpperRestart,
                   BarrierKind::H1LowerRestart, BarrierKind::H2Upper, BarrierKind::H2LowerZ})
        if (s == to_string(k)) return k;
    throw ConfigError(fmt::format("unknown barrier kind '{}'", s));
}

bool is_upper(BarrierKind k) {
    return k == BarrierKind::H1Upper || k == BarrierKind::H1UpperRestart || k == BarrierKind::H2Upper;
}

const char* to_string(Zone z) {
    switch (z) {
        case Zone::Inner: return "inner";
        case Zone::CosineTail: return "cosine-tail";
        case Zone::Beyond: return "beyond";
        case Zone::Boundary: return "boundary";
        case Zone::Initial: return "initial";
    }
    return "?";
}

double BarrierParams::epsilon() const { return std::isnan(eps) ? (beta - delta) / 4.0 : eps; }

BarrierParams BarrierParams::defaults(BarrierKind kind, double exponent) {
    BarrierParams p;
    if (kind == BarrierKind::H2LowerZ) {
        // the third T condition wants alpha - delta as wide as the ladder allows
        p.delta = 0.10;
        p.gamma = 0.11;
        p.beta = 0.12;
        p.alpha = 0.159;
        return p;
    }
    const double kappa = kind == BarrierKind::H2Upper ? std::max(exponent - 1.0, -3.0) : std::max(exponent, -3.0);
    if (kappa > 1.0) p.alpha = 0.5 - 1.0 / (45.0 * kappa);
    if (restart_kind(kind)) {
        // A low ladder: the lower barrier's cosine-tail balance scales like
        // T^{3 alpha - 1 - gamma* - beta*}, and alpha near 7/15 keeps the inner-zone
        // operator (beta* - 3/2)/tau + tau^{-2 alpha} positive from tau ~ 440 on.
        p.delta = 0.01;
        p.gamma = 0.02;
        p.beta = 0.03;
        p.delta_s = 0.04;
        p.gamma_s = 0.05;
        p.beta_s = 0.06;
        p.alpha = 0.47;
    }
    return p;
}

// ---- spec --------------------------------------------------------------------------

BarrierSpec::BarrierSpec(BarrierSetup setup, BarrierParams params) : setup_(std::move(setup)), p_(params) {
    const auto kind = setup_.kind;
    if (!(p_.T > 0.0) || !std::isfinite(p_.T)) throw DomainError("barrier needs a finite T > 0");
    if (!(p_.alpha > 0.0) || !(p_.M >= 0.0)) throw DomainError("barrier needs alpha > 0 and M >= 0");
    const double f0 = setup_.f.fprime0();
    const double k = setup_.exponent;
    const double T = p_.T;
    const double L0 = std::pow(T, p_.alpha);

    if (h2_kind(kind)) {
        if (!(setup_.lambda > 0.0)) throw DomainError("H2 barriers need a decay rate lambda > 0");
        sp_ = lambda_of_c(speed_of_lambda(setup_.lambda, f0), f0);
        if (sp_.critical()) throw DomainError("H2 barriers need lambda < lambda*");
        datum_ = TailInitialData::h2(k);
    } else {
        sp_ = lambda_of_c(2.0 * std::sqrt(f0), f0);
        if (restart_kind(kind)) {
            if (!setup_.restart) throw DomainError("restart barriers need the restarted datum w0*");
            datum_ = *setup_.restart;
        } else {
            datum_ = TailInitialData::h1(k);
        }
    }

    switch (kind) {
        case BarrierKind::H1Upper:
        case BarrierKind::H1UpperRestart:
        case BarrierKind::H2Upper: {
            s_ = kind == BarrierKind::H2Upper ? 2.0 * sp_.lambda : sp_.c_star;
            kappa_ = kind == BarrierKind::H2Upper ? std::max(k - 1.0, -3.0) : std::max(k, -3.0);
            P_ = restart_kind(kind) ? p_.beta_s - 1.5 : 0.5 * kappa_ + p_.beta;
            coef_ = restart_kind(kind) ? 1.0 : setup_.a2;
            corr_amp_ = p_.M;
            y_shift_ = s_ * T;
            bump_center_ = s_ * T;
            bumps_ = {CosineBump{-p_.M * std::pow(T, P_), L0, 0.0, true}};
            w_reaction_ = kind == BarrierKind::H2Upper ? sp_.lambda : sp_.lambda_star;
            break;
        }
        case BarrierKind::H1Lower:
        case BarrierKind::H1LowerRestart: {
            s_ = sp_.c_star;
            kappa_ = std::max(k, -3.0);
            P_ = restart_kind(kind) ? p_.beta_s - 1.5 : 0.5 * kappa_ + p_.beta;
            coef_ = restart_kind(kind) ? 1.0 : setup_.a1;
            if (kind == BarrierKind::H1Lower && k >= -1.0 && k < 0.0) time_shift_ = p_.tau_factor * T;
            corr_amp_ = -1.0;
            bumps_ = {CosineBump{std::pow(T, P_), L0, 0.0, true}};
            w_reaction_ = sp_.lambda_star;
            break;
        }
        case BarrierKind::H2LowerZ: {
            s_ = sp_.c;
            kappa_ = std::max(k - 1.0, -3.0);
            P_ = k + p_.beta;
            coef_ = setup_.a1;
            corr_amp_ = -1.0;
            half_mu_ = 0.5 * sp_.mu;
            bumps_ = {CosineBump{std::pow(T, p_.alpha * k - 2.0 + p_.beta), L0, 0.0, true}};
            w_reaction_ = sp_.lambda;  // after dividing out e^{(mu/2) r}
            break;
        }
    }
}

double BarrierSpec::origin(double t) const { return upper() ? s_ * (t + p_.T) : s_ * t; }

double BarrierSpec::boundary(double t) const {
    const double d = restart_kind(setup_.kind) ? p_.delta_s : p_.delta;
    const double b = std::pow(t + p_.T, d);
    return upper() ? -b : b;
}

double BarrierSpec::length(double t) const { return std::pow(t + p_.T, p_.alpha); }

double BarrierSpec::multiplier(double t) const {
    const double g = restart_kind(setup_.kind) ? p_.gamma_s : p_.gamma;
    const double d = std::pow(p_.T, -g) - std::pow(t + p_.T, -g);
    return upper() ? 1.0 + d : 1.0 - d;
}

double BarrierSpec::multiplier_prime(double t) const {
    const double g = restart_kind(setup_.kind) ? p_.gamma_s : p_.gamma;
    const double d = g * std::pow(t + p_.T, -g - 1.0);
    return upper() ? d : -d;
}

double BarrierSpec::heat_y(double t, double r) const {
    if (setup_.kind == BarrierKind::H2LowerZ) return r + 2.0 * half_mu_ * t;
    return r + y_shift_;
}

// For the z kind everything below is divided by e^{(mu/2) r}; the sign is unaffected.
double BarrierSpec::linear_part(double t, double r) const {
    const double y = heat_y(t, r);
    // offset of y from the bump centre, kept exact for the far-out upper bumps
    const double rb = upper() ? r : y;
    double w = 0.0;
    if (t == 0.0 && time_shift_ == 0.0) {
        w = coef_ * (y >= 0.0 ? datum_.base(y) : -datum_.base(-y));
    } else {
        w = coef_ * heat_eval_quadrature(datum_, t + time_shift_, y);
    }
    for (const auto& b : bumps_) {
        const std::vector<double> br{-1.5 * kPi * b.L, -0.5 * kPi * b.L, 0.0, 0.5 * kPi * b.L, 1.5 * kPi * b.L};
        auto g = [&b](double z) { return b(z); };
        if (t == 0.0) {
            w += b(rb);
            if (bump_center_ != 0.0) w += b(rb + 2.0 * bump_center_);
        } else {
            w += heat_eval_free(g, t, rb, b.lo(), b.hi(), br);
            if (bump_center_ != 0.0) w += heat_eval_free(g, t, rb + 2.0 * bump_center_, b.lo(), b.hi(), br);
        }
    }
    return w;
}

double BarrierSpec::correction(double t, double r) const {
    const double L = length(t);
    const double b = boundary(t);
    if (r < b || r > 1.5 * kPi * L) return 0.0;
    const double tau = t + p_.T;
    double amp = corr_amp_ * std::pow(tau, P_);
    if (half_mu_ > 0.0) amp *= std::exp(half_mu_ * (std::pow(tau, p_.delta) - r));
    return amp * std::cos(r / L);
}

double BarrierSpec::correction_operator(double t, double r) const {
    const double L = length(t);
    const double b = boundary(t);
    if (r < b || r > 1.5 * kPi * L) return 0.0;
    const double tau = t + p_.T;
    double amp = corr_amp_ * std::pow(tau, P_);
    double lin = P_ / tau + std::pow(tau, -2.0 * p_.alpha);
    if (half_mu_ > 0.0) {
        amp *= std::exp(half_mu_ * (std::pow(tau, p_.delta) - r));
        lin += half_mu_ * p_.delta * std::pow(tau, p_.delta - 1.0) + half_mu_ * half_mu_;
    }
    const double z = r / L;
    return amp * (lin * std::cos(z) + p_.alpha * z / tau * std::sin(z));
}

double BarrierSpec::reaction_offset(double t, double r) const {
    switch (setup_.kind) {
        case BarrierKind::H1Upper:
        case BarrierKind::H1UpperRestart: return r + s_ * p_.T;
        case BarrierKind::H2Upper: return r + s_ * p_.T - sp_.mu * t;
        default: return r;
    }
}

double BarrierSpec::reaction(double t, double r, double value) const {
    return r_weighted(setup_.f, w_reaction_, 0.0, 0.0, reaction_offset(t, r), value);
}

// ---- evaluation ----------------------------------------------------------------------

double barrier_x(const BarrierSpec& b, double t, double r) { return b.origin(t) + r; }

namespace {

void check_point(const BarrierSpec& b, double t, double r) {
    if (!(t >= 0.0)) throw DomainError("barrier evaluated at t < 0");
    const double lo = b.boundary(t);
    if (r < lo - 1e-12 * std::max(1.0, std::abs(lo)))
        throw DomainError(fmt::format("({:g}, offset {:g}) is left of the barrier region (boundary {:g})", t, r, lo));
}

double scaled_value(const BarrierSpec& b, double t, double r) {
    return b.multiplier(t) * b.linear_part(t, r) + b.correction(t, r);
}

struct ResidualTerms {
    double value = 0.0;     // barrier value (scaled for z)
    double residual = 0.0;  // scaled for z
    double scale = 0.0;     // sum of magnitudes of the terms
};

ResidualTerms residual_terms(const BarrierSpec& b, double t, double r) {
    const double w = b.linear_part(t, r);
    const double lin = b.multiplier_prime(t) * w;
    const double corr = b.correction_operator(t, r);
    ResidualTerms out;
    out.value = b.multiplier(t) * w + b.correction(t, r);
    out.residual = lin + corr;
    out.scale = std::abs(lin) + std::abs(corr);
    if (!b.upper()) {
        const double R = b.reaction(t, r, out.value);
        out.residual += R;
        out.scale += std::abs(R);
    }
    return out;
}

double unscale(const BarrierSpec& b, double r, double v) {
    return b.half_mu() > 0.0 ? v * std::exp(b.half_mu() * r) : v;
}

}  // namespace

double eval_barrier_offset(const BarrierSpec& b, double t, double r) {
    check_point(b, t, r);
    return unscale(b, r, scaled_value(b, t, r));
}

double eval_barrier(const BarrierSpec& b, double t, double x) { return eval_barrier_offset(b, t, x - b.origin(t)); }

double operator_residual_offset(const BarrierSpec& b, double t, double r) {
    check_point(b, t, r);
    if (!(t > 0.0)) throw DomainError("operator residual needs t > 0");
    return unscale(b, r, residual_terms(b, t, r).residual);
}

double operator_residual(const BarrierSpec& b, double t, double x) {
    return operator_residual_offset(b, t, x - b.origin(t));
}

// ---- closed-form conditions ------------------------------------------------------------

std::vector<std::string> check_ladder(const BarrierSpec& b) {
    std::vector<std::string> out;
    const auto& p = b.params();
    auto need = [&out](bool ok, std::string what) {
        if (!ok) out.push_back(std::move(what));
    };
    if (b.kind() == BarrierKind::H2LowerZ) {
        need(0.0 < p.delta && p.delta < p.gamma && p.gamma < p.beta && p.beta < p.alpha && p.alpha < kLadderTop,
             fmt::format("need 0 < delta < gamma < beta < alpha < 4/25, have {:g}, {:g}, {:g}, {:g}", p.delta,
                         p.gamma, p.beta, p.alpha));
        return out;
    }
    need(0.0 < p.delta && p.delta < p.gamma && p.gamma < p.beta && p.beta < kLadderTop,
         fmt::format("need 0 < delta < gamma < beta < 4/25, have {:g}, {:g}, {:g}", p.delta, p.gamma, p.beta));
    need(7.0 / 15.0 < p.alpha && p.alpha < 0.5, fmt::format("need 7/15 < alpha < 1/2, have {:g}", p.alpha));
    if (b.kappa() > 1.0) {
        const double a = 0.5 - 1.0 / (45.0 * b.kappa());
        need(std::abs(p.alpha - a) < 1e-12, fmt::format("kappa > 1 fixes alpha = {:.12g}, have {:g}", a, p.alpha));
    }
    if (b.kind() == BarrierKind::H1UpperRestart || b.kind() == BarrierKind::H1LowerRestart) {
        need(p.beta < p.delta_s && p.delta_s < p.gamma_s && p.gamma_s < p.beta_s && p.beta_s < kLadderTop,
             fmt::format("need beta < delta* < gamma* < beta* < 4/25, have {:g}, {:g}, {:g}, {:g}", p.beta,
                         p.delta_s, p.gamma_s, p.beta_s));
        need(b.setup().exponent < -3.0, "the restart construction is for k < -3");
    }
    const double eps = p.epsilon();
    need(eps > 0.0 && eps < (p.beta - p.delta) / 2.0,
         fmt::format("need 0 < eps < (beta - delta)/2, have {:g}", eps));
    return out;
}

std::vector<std::string> check_T(const BarrierSpec& b) {
    std::vector<std::string> out;
    const auto& p = b.params();
    const double T = p.T, A = b.setup().A;
    const double Td = std::pow(T, p.delta);
    const double L = std::pow(T, p.alpha);
    if (b.kind() == BarrierKind::H2LowerZ) {
        if (!(Td > A)) out.push_back(fmt::format("T^delta = {:.6g} <= A = {:g}", Td, A));
        if (!(std::cos(std::pow(T, p.delta - p.alpha)) > 0.5)) out.push_back("cos(T^{delta - alpha}) <= 1/2");
        const double mu2 = 0.5 * lambda_of_c(b.frame_speed(), b.setup().f.fprime0()).mu;
        const double nu = b.setup().exponent;
        // compare logarithms: e^{mu/2 T^alpha} T^{alpha nu - 2 - nu} > e^{mu/2 T^delta}
        const double lhs = mu2 * L + (p.alpha * nu - 2.0 - nu) * std::log(T);
        if (!(lhs > mu2 * Td)) out.push_back("e^{(mu/2) T^alpha} T^{alpha nu - 2 - nu} <= e^{(mu/2) T^delta}");
        if (!(Td < 0.25 * kPi * L)) out.push_back("boundary T^delta is not left of (pi/4) T^alpha");
        return out;
    }
    const double s = b.frame_speed();
    if (!(std::min(s * T - Td, Td) > A))
        out.push_back(fmt::format("min(c T - T^delta, T^delta) = {:.6g} <= A = {:g}", std::min(s * T - Td, Td), A));
    if (!(std::cos(std::pow(T, kLadderTop - p.alpha)) > 0.5)) out.push_back("cos(T^{4/25 - alpha}) <= 1/2");
    const double k = b.setup().exponent;
    if ((b.kind() == BarrierKind::H1Upper || b.kind() == BarrierKind::H1Lower) && k >= -3.0) {
        if (!(p.alpha * (k + 1.0) > 0.5 * b.kappa() + p.beta))
            out.push_back("positivity guard T^{alpha(k+1)} > T^{kappa/2 + beta} fails");
    }
    const double bd = std::abs(b.boundary(0.0));
    if (!(bd < 0.25 * kPi * L)) out.push_back("boundary T^delta is not left of (pi/4) T^alpha");
    if (b.upper() && !(s * T > 1.5 * kPi * L)) out.push_back("shifted cosine bump reaches x < 0");
    return out;
}

// ---- certification -----------------------------------------------------------------------

SamplingPlan SamplingPlan::coarse() {
    SamplingPlan p;
    p.per_decade = 8;
    p.per_zone = 16;
    return p;
}

std::vector<double> lattice_times(const SamplingPlan& plan) {
    std::vector<double> ts;
    const double decades = std::log10(plan.t_hi / plan.t_lo);
    const int n = std::max(1, static_cast<int>(std::lround(decades * plan.per_decade)));
    for (int i = 0; i <= n; ++i) ts.push_back(plan.t_lo * std::pow(10.0, decades * i / n));
    return ts;
}

namespace {

struct PointResult {
    double t, r, margin, rel;
    Zone zone;
};

void zone_range(const BarrierSpec& b, const SamplingPlan& plan, double t, Zone z, double& lo, double& hi) {
    const double L = b.length(t);
    switch (z) {
        case Zone::Inner:
            lo = b.boundary(t);
            hi = 0.25 * kPi * L;
            break;
        case Zone::CosineTail:
            lo = 0.25 * kPi * L;
            hi = 1.5 * kPi * L;
            break;
        default:
            lo = 1.5 * kPi * L;
            hi = lo + plan.beyond_L * L + plan.beyond_sqrt * std::sqrt(t);
            break;
    }
}

}  // namespace

Certificate certify(const BarrierSpec& b, const SamplingPlan& plan, const SolutionOracle& solution) {
    Certificate c;
    c.kind = b.kind();
    c.params = b.params();
    c.ladder_problems = check_ladder(b);
    c.T_problems = check_T(b);
    const bool up = b.upper();

    const auto ts = lattice_times(plan);
    const Zone zones[3] = {Zone::Inner, Zone::CosineTail, Zone::Beyond};

    // one task per time slice
    auto slice = [&](double t) {
        std::vector<PointResult> out;
        out.reserve(3 * plan.per_zone);
        for (Zone z : zones) {
            double lo, hi;
            zone_range(b, plan, t, z, lo, hi);
            if (!(hi > lo)) continue;
            for (int i = 0; i < plan.per_zone; ++i) {
                const double r = lo + (hi - lo) * (i + 0.5) / plan.per_zone;
                const auto terms = residual_terms(b, t, r);
                const double margin = up ? terms.residual : -terms.residual;
                const double rel = terms.scale > 0.0 ? margin / terms.scale : 0.0;
                out.push_back({t, r, margin, rel, z});
            }
        }
        return out;
    };

    unsigned nthreads = plan.threads ? plan.threads : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::vector<PointResult>> results(ts.size());
    {
        std::vector<std::future<void>> jobs;
        std::atomic<std::size_t> next{0};
        for (unsigned k = 0; k < nthreads; ++k) {
            jobs.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next++; i < ts.size(); i = next++) results[i] = slice(ts[i]);
            }));
        }
        for (auto& j : jobs) j.get();
    }

    std::vector<ZoneSummary> sums;
    for (Zone z : zones) sums.push_back(ZoneSummary{z});
    for (const auto& sl : results) {
        for (const auto& p : sl) {
            auto& s = sums[static_cast<int>(p.zone)];
            ++s.points;
            if (p.rel < s.worst_margin) {
                s.worst_margin = p.rel;
                s.worst_t = p.t;
                s.worst_r = p.r;
            }
            if (p.rel < -plan.rel_tol) {
                ++s.violations;
                ++c.sign_violations;
                c.violations.push_back({p.t, p.r, barrier_x(b, p.t, p.r), p.margin, p.zone});
            }
        }
    }

    if (solution) {
        c.ordering_checked = true;
        ZoneSummary bd{Zone::Boundary}, init{Zone::Initial};
        auto record = [&](ZoneSummary& s, double t, double r, double barrier, double sol) {
            const double margin = up ? barrier - sol : sol - barrier;
            const double scale = std::abs(barrier) + std::abs(sol);
            const double rel = scale > 0.0 ? margin / scale : 0.0;
            ++s.points;
            if (rel < s.worst_margin) {
                s.worst_margin = rel;
                s.worst_t = t;
                s.worst_r = r;
            }
            if (rel < -plan.rel_tol) {
                ++s.violations;
                ++c.ordering_violations;
                c.violations.push_back({t, r, barrier_x(b, t, r), margin, s.zone});
            }
        };
        for (double t : ts) {
            const double r = b.boundary(t);
            record(bd, t, r, scaled_value(b, t, r), solution(t, r));
        }
        for (Zone z : zones) {
            double lo, hi;
            zone_range(b, plan, 0.0, z, lo, hi);
            for (int i = 0; i < plan.per_zone; ++i) {
                const double r = lo + (hi - lo) * (i + 0.5) / plan.per_zone;
                record(init, 0.0, r, scaled_value(b, 0.0, r), solution(0.0, r));
            }
        }
        sums.push_back(bd);
        sums.push_back(init);
    }
    c.zones = std::move(sums);
    return c;
}

// ---- tuning ----------------------------------------------------------------------------

namespace {

std::string binding_of(const Certificate& c) {
    if (!c.ladder_problems.empty()) return c.ladder_problems.front();
    if (!c.T_problems.empty()) return c.T_problems.front();
    for (const auto& z : c.zones)
        if (z.violations > 0)
            return fmt::format("{} zone: {} sign violations, worst relative margin {:.3g} at t={:g}, offset {:.6g}",
                               to_string(z.zone), z.violations, z.worst_margin, z.worst_t, z.worst_r);
    return "none";
}

bool only_cosine_tail(const Certificate& c) {
    for (const auto& z : c.zones)
        if (z.violations > 0 && z.zone != Zone::CosineTail) return false;
    return true;
}

}  // namespace

TuneResult autotune_T(const BarrierSetup& setup, BarrierParams draft, const TuneOptions& opt,
                      const std::function<TailInitialData(double)>& restart_at) {
    TuneResult res;
    const bool restart = restart_kind(setup.kind);
    if (restart && !restart_at) throw DomainError("restart barriers need a restart_at(T) callback");

    auto build = [&](const BarrierParams& p) {
        BarrierSetup s = setup;
        if (restart) s.restart = restart_at(p.T);
        return BarrierSpec(std::move(s), p);
    };

    {
        // the ladder does not depend on T; reject before evaluating anything
        BarrierSetup probe = setup;
        if (restart && !probe.restart) probe.restart = TailInitialData::h1(setup.exponent);
        const auto bad = check_ladder(BarrierSpec(probe, draft));
        if (!bad.empty()) throw TuningError(fmt::format("{}: broken ladder: {}", to_string(setup.kind), bad.front()));
    }

    std::string binding = "none";
    for (double T = opt.T_start; T <= opt.T_max; T *= 2.0) {
        BarrierParams p = draft;
        p.T = T;
        ++res.candidates;
        std::optional<BarrierSpec> spec;
        try {
            spec.emplace(build(p));
        } catch (const TuningError& e) {
            binding = e.what();
            break;
        }
        const auto tp = check_T(*spec);
        if (!tp.empty()) {
            binding = tp.front();
            continue;
        }
        auto cert = certify(*spec, opt.screen);
        if (!cert.sign_ok() && spec->upper() && opt.shrink_M && only_cosine_tail(cert)) {
            for (int i = 0; i < opt.max_M_steps && !cert.sign_ok(); ++i) {
                p.M *= opt.M_factor;
                spec.emplace(build(p));
                cert = certify(*spec, opt.screen);
            }
            res.log.push_back(fmt::format("T={:g}: M reduced to {:.6g}", T, p.M));
        }
        if (!cert.sign_ok()) {
            binding = binding_of(cert);
            res.log.push_back(fmt::format("T={:g}: screen failed ({})", T, binding));
            continue;
        }
        cert = certify(*spec, opt.full);
        if (cert.sign_ok()) {
            res.log.push_back(fmt::format("T={:g}: certified on the full lattice", T));
            res.params = p;
            res.certificate = std::move(cert);
            return res;
        }
        binding = binding_of(cert);
        res.log.push_back(fmt::format("T={:g}: full lattice failed ({})", T, binding));
    }
    throw TuningError(fmt::format("{}: no T up to {:g} certifies; binding constraint: {}", to_string(setup.kind),
                                  opt.T_max, binding));
}

// ---- restart datum -----------------------------------------------------------------------

TailInitialData restart_datum(const FieldSnapshot& s, double k) {
    if (s.frame.kind != FrameKind::LeadingEdge)
        throw DomainError("the restart datum is read from a leading-edge snapshot");
    std::vector<double> z, w;
    auto phi = [&s](std::size_t i) { return s.log_scale ? std::exp(s.values[i]) : s.values[i]; };
    std::size_t i1 = 0;
    while (i1 < s.size() && s.y[i1] < 1.0) ++i1;
    if (i1 == 0 || i1 + 4 >= s.size()) throw DomainError("leading-edge snapshot does not cover z = 1");
    // phi at z = 1 by linear interpolation, then w0* is linear on [0, 1]
    const double th = (1.0 - s.y[i1 - 1]) / (s.y[i1] - s.y[i1 - 1]);
    const double w1 = (1.0 - th) * phi(i1 - 1) + th * phi(i1);
    for (int j = 0; j <= 4; ++j) {
        z.push_back(0.25 * j);
        w.push_back(w1 * 0.25 * j);
    }
    for (std::size_t i = i1; i < s.size(); ++i) {
        if (s.y[i] <= z.back()) continue;
        const double v = phi(i);
        if (!std::isfinite(v)) break;
        z.push_back(s.y[i]);
        w.push_back(v);
    }
    return TailInitialData::restart(std::move(z), std::move(w), k + 1.0, k);
}

RestartEnvelope restart_envelope(const TailInitialData& w0, double T, double delta_s, int samples) {
    const double a = std::pow(T, delta_s), b = std::sqrt(T);
    if (!(b > a)) throw DomainError("restart envelope needs T^{delta*} < sqrt(T)");
    RestartEnvelope e{std::numeric_limits<double>::infinity(), 0.0};
    for (int i = 0; i < samples; ++i) {
        const double z = a + (b - a) * i / (samples - 1);
        const double q = w0.base(z) * std::pow(T, 1.5) / z;
        e.C1 = std::min(e.C1, q);
        e.C2 = std::max(e.C2, q);
    }
    return e;
}

// ---- reports ---------------------------------------------------------------------------------

void write_certificate(std::ostream& os, const Certificate& c) {
    const auto& p = c.params;
    os << fmt::format("barrier certificate: {} (sampled numerics, not a proof)\n", to_string(c.kind));
    os << fmt::format("params: delta={:g} gamma={:g} beta={:g} alpha={:g} delta*={:g} gamma*={:g} beta*={:g} "
                      "T={:.6g} M={:.6g} eps={:g}\n",
                      p.delta, p.gamma, p.beta, p.alpha, p.delta_s, p.gamma_s, p.beta_s, p.T, p.M, p.epsilon());
    for (const auto& s : c.ladder_problems) os << "ladder: " << s << '\n';
    for (const auto& s : c.T_problems) os << "T condition: " << s << '\n';
    for (const auto& z : c.zones)
        os << fmt::format("zone {:<12} points={:<7} violations={:<6} worst_rel_margin={:.3e} at t={:.4g} offset={:.6g}\n",
                          to_string(z.zone), z.points, z.violations, z.worst_margin, z.worst_t, z.worst_r);
    os << fmt::format("sign violations: {}\n", c.sign_violations);
    if (c.ordering_checked) os << fmt::format("ordering violations: {}\n", c.ordering_violations);
    else os << "ordering: not checked\n";
    const std::size_t shown = std::min<std::size_t>(c.violations.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) {
        const auto& v = c.violations[i];
        os << fmt::format("  violation zone={} t={:.6g} offset={:.6g} x={:.10g} margin={:.3e}\n", to_string(v.zone),
                          v.t, v.r, v.x, v.margin);
    }
    if (c.violations.size() > shown) os << fmt::format("  ... {} more\n", c.violations.size() - shown);
    os << "result: " << (c.passed() ? "PASS" : (c.sign_ok() ? "SIGN-OK" : "FAIL")) << '\n';
}

void write_certificate_csv(std::ostream& os, const Certificate& c) {
    os << "# kppfront barrier certificate v1 kind=" << to_string(c.kind) << " T=" << fmt::format("{:.17g}", c.params.T)
       << '\n';
    os << "zone,points,violations,worst_rel_margin,worst_t,worst_offset\n";
    for (const auto& z : c.zones)
        os << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g}\n", to_string(z.zone), z.points, z.violations,
                          z.worst_margin, z.worst_t, z.worst_r);
}

}  // namespace kpp
