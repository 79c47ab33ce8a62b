#include "kppfront/front_lab.hpp"

#include "kppfront/errors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/fpclassify.hpp>  // before pchip, which calls isnan unqualified
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <fmt/format.h>
#include <istream>
#include <ostream>
#include <sstream>

namespace kpp {

void FrontTrace::add(double time, double position) {
    if (!std::isfinite(position)) throw DomainError(fmt::format("front position at t={:g} is not finite", time));
    if (!t.empty() && !(time > t.back()))
        throw DomainError(fmt::format("trace times must increase ({:g} after {:g})", time, t.back()));
    t.push_back(time);
    X.push_back(position);
}

// ---- level sets -----------------------------------------------------------------

std::optional<double> level_set(const std::vector<double>& x, const std::vector<double>& u, double m) {
    const std::size_t n = x.size();
    if (n != u.size() || n == 0) throw DomainError("level_set needs matching non-empty x and u");
    std::size_t i = n;
    while (i-- > 0)
        if (u[i] >= m) break;
    if (i == static_cast<std::size_t>(-1)) return std::nullopt;
    if (i + 1 == n) return x[i];
    if (u[i] == m) return x[i];
    // cubic through up to four nodes around the crossing cell [x_i, x_{i+1}]
    const std::size_t a = i > 0 ? i - 1 : i;
    const std::size_t b = std::min(n - 1, i + 2);
    if (b - a + 1 < 3) return x[i] + (u[i] - m) / (u[i] - u[i + 1]) * (x[i + 1] - x[i]);
    std::vector<double> xs(x.begin() + a, x.begin() + b + 1), us(u.begin() + a, u.begin() + b + 1);
    boost::math::interpolators::pchip<std::vector<double>> p(std::move(xs), std::move(us));
    auto g = [&](double z) { return p(z) - m; };
    std::uintmax_t it = 100;
    auto tol = [](double l, double r) { return std::abs(r - l) < 1e-13 * (1.0 + std::abs(l)); };
    const double gl = g(x[i]), gr = g(x[i + 1]);
    if (gl < 0.0 || gr > 0.0) return x[i] + (u[i] - m) / (u[i] - u[i + 1]) * (x[i + 1] - x[i]);
    if (gl == 0.0) return x[i];
    if (gr == 0.0) return x[i + 1];
    auto r = boost::math::tools::toms748_solve(g, x[i], x[i + 1], gl, gr, tol, it);
    return 0.5 * (r.first + r.second);
}

std::optional<double> level_set(const FieldSnapshot& s, double m) {
    std::vector<double> x(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) x[i] = s.x(i);
    return level_set(x, s.lab_values(), m);
}

// ---- fits -------------------------------------------------------------------------

double AsymptoticFit::predict(double t) const {
    double v = speed.value * t + log_t.value * std::log(t) + constant.value;
    if (model.loglog_t.mode != FitTerm::Off) v += loglog_t.value * std::log(std::log(t));
    return v;
}

AsymptoticFit fit_shift(const FrontTrace& trace, const FitModel& model, FitWindow window) {
    if (trace.size() == 0) throw DomainError("empty trace");
    if (window.hi <= 0.0) window.hi = trace.t.back();
    if (window.lo <= 0.0) window.lo = window.hi / 10.0;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < trace.size(); ++i)
        if (trace.t[i] >= window.lo * (1 - 1e-12) && trace.t[i] <= window.hi * (1 + 1e-12)) idx.push_back(i);
    if (idx.size() < 20)
        throw DomainError(fmt::format("fit window [{:g}, {:g}] holds {} samples; at least 20 are needed", window.lo,
                                      window.hi, idx.size()));
    const bool loglog = model.loglog_t.mode != FitTerm::Off;
    if (loglog && trace.t[idx.front()] <= std::exp(1.0))
        throw DomainError("ln ln t needs the window to start above e");

    struct Col {
        FitTerm term;
        FitCoefficient* out;
        std::function<double(double)> basis;
    };
    AsymptoticFit fit;
    fit.model = model;
    fit.window = window;
    fit.samples = idx.size();
    std::vector<Col> cols = {
        {model.speed, &fit.speed, [](double t) { return t; }},
        {model.log_t, &fit.log_t, [](double t) { return std::log(t); }},
        {model.loglog_t, &fit.loglog_t, [](double t) { return std::log(std::log(t)); }},
        {model.constant, &fit.constant, [](double) { return 1.0; }},
    };
    std::vector<Col*> freec;
    for (auto& c : cols) {
        if (c.term.mode == FitTerm::Fixed) c.out->value = c.term.value;
        if (c.term.mode == FitTerm::Free) freec.push_back(&c);
    }
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index p = static_cast<Eigen::Index>(freec.size());
    Eigen::VectorXd rhs(n), sw(n);
    Eigen::MatrixXd A(n, p);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double t = trace.t[idx[r]];
        double y = trace.X[idx[r]];
        for (auto& c : cols)
            if (c.term.mode == FitTerm::Fixed) y -= c.term.value * c.basis(t);
        sw(r) = 1.0 / std::sqrt(t);
        rhs(r) = sw(r) * y;
        for (Eigen::Index j = 0; j < p; ++j) A(r, j) = sw(r) * freec[j]->basis(t);
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (p > 0) {
        Eigen::VectorXd scale = A.colwise().norm().transpose();
        Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        fit.condition = sv(0) / sv(p - 1);
        if (!(fit.condition <= 1e8))
            throw DegenerateFitError(fmt::format("design condition number {:.3g} exceeds 1e8; use a longer window or "
                                                 "fix a coefficient (ln t and ln ln t are nearly collinear)",
                                                 fit.condition));
        Eigen::VectorXd bs = svd.solve(rhs);
        beta = scale.cwiseInverse().asDiagonal() * bs;
    }
    const Eigen::VectorXd res = rhs - A * beta;
    double rss_unweighted = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) rss_unweighted += std::pow(res(r) / sw(r), 2);
    fit.residual_rms = std::sqrt(rss_unweighted / n);
    if (p > 0) {
        const double s2 = n > p ? res.squaredNorm() / static_cast<double>(n - p) : 0.0;
        const Eigen::MatrixXd cov = s2 * (A.transpose() * A).inverse();
        for (Eigen::Index j = 0; j < p; ++j) {
            freec[j]->out->value = beta(j);
            freec[j]->out->stderr_ = std::sqrt(std::max(0.0, cov(j, j)));
            freec[j]->out->fitted = true;
        }
    }
    return fit;
}

// ---- waves --------------------------------------------------------------------------

double wave_distance(const FieldSnapshot& s, const WaveProfile& W, double shift) {
    if (s.size() == 0) throw DomainError("empty snapshot");
    if (shift < s.x(0) || shift > s.x(s.size() - 1))
        throw RangeError(fmt::format("shift {:g} lies outside the grid [{:g}, {:g}]", shift, s.x(0), s.x(s.size() - 1)));
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double x = s.x(i);
        if (x < 0.0) continue;
        d = std::max(d, std::abs(s.u(i) - W(x - shift)));
    }
    return d;
}

ShiftMatch optimal_shift(const FieldSnapshot& s, const WaveProfile& W, std::optional<double> guess,
                         double half_width) {
    if (!guess) {
        const auto X = level_set(s, 0.5);
        if (!X) throw DomainError("no front in the snapshot");
        guess = *X - profile_inverse(W, 0.5);
    }
    auto f = [&](double sh) { return wave_distance(s, W, sh); };
    std::uintmax_t it = 200;
    const auto r = boost::math::tools::brent_find_minima(f, *guess - half_width, *guess + half_width, 40, it);
    return {r.first, r.second};
}

namespace {

double interp_log_t(const std::vector<double>& t, const std::vector<double>& v, double tq) {
    auto it = std::lower_bound(t.begin(), t.end(), tq * (1.0 - 1e-12));
    const std::size_t j = static_cast<std::size_t>(it - t.begin());
    if (j == 0) return v.front();
    if (j >= t.size()) return v.back();
    const double w = std::clamp(std::log(tq / t[j - 1]) / std::log(t[j] / t[j - 1]), 0.0, 1.0);
    return w * v[j] + (1.0 - w) * v[j - 1];
}

}  // namespace

SigmaEstimate estimate_sigma_infinity(const std::vector<double>& t, const std::vector<ShiftMatch>& matches,
                                      const std::function<double(double)>& law, double tolerance) {
    if (t.size() != matches.size() || t.size() < 2 || !std::is_sorted(t.begin(), t.end()))
        throw DomainError("sigma estimate needs increasing times with one shift each");
    SigmaEstimate e;
    e.t = t;
    for (std::size_t i = 0; i < t.size(); ++i) {
        e.shift.push_back(matches[i].shift);
        e.distance.push_back(matches[i].distance);
        e.sigma.push_back(matches[i].shift - law(t[i]));
    }
    const double tl = t.back();
    double acc = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= tl / 10.0 * (1.0 - 1e-12)) {
            acc += e.sigma[i];
            ++cnt;
        }
    e.value = acc / cnt;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t.front() * 10.0 * (1.0 - 1e-12)) continue;
        const double d = std::abs(e.sigma[i] - interp_log_t(t, e.sigma, t[i] / 10.0));
        e.decade_drift.push_back(d);
        if (t[i] >= tl / 10.0 * (1.0 - 1e-12)) e.last_two_decades_drift = std::max(e.last_two_decades_drift, d);
    }
    if (tl < t.front() * 100.0 * (1.0 - 1e-12)) {
        e.converged = false;
        e.warning = "fewer than two decades of shifts; drift not assessed";
    } else if (e.last_two_decades_drift > tolerance) {
        e.converged = false;
        e.warning = fmt::format("sigma drifts by {:.3g} per decade (tolerance {:.3g})", e.last_two_decades_drift,
                                tolerance);
    }
    return e;
}

std::function<double(double)> drift_law_critical(const SpeedPair& sp, double k) {
    const double c = sp.c_star, l = sp.lambda_star;
    if (k > -3.0) return [c, l, k](double t) { return c * t + k / (2.0 * l) * std::log(t); };
    if (k == -3.0)
        return [c, l](double t) { return c * t - 1.5 / l * std::log(t) + std::log(std::log(t)) / l; };
    return [c, l](double t) { return c * t - 1.5 / l * std::log(t); };
}

std::function<double(double)> drift_law_flat(const SpeedPair& sp, double nu) {
    const double c = sp.c, l = sp.lambda;
    return [c, l, nu](double t) { return c * t + nu / l * std::log(t); };
}

// ---- text output ------------------------------------------------------------------------

void write_trace_csv(std::ostream& os, const FrontTrace& tr, double c, const std::vector<double>& shifts) {
    os << fmt::format("# kppfront front trace v1 m={:.17g} c={:.17g} run={} dx={:.17g}\n", tr.m, c,
                      tr.run_id.empty() ? "-" : tr.run_id, tr.dx);
    os << "t,X_m,X_m_minus_ct,shift_at_t\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << fmt::format("{:.12g},{:.12g},{:.12g},", tr.t[i], tr.X[i], tr.X[i] - c * tr.t[i]);
        if (i < shifts.size()) os << fmt::format("{:.12g}", shifts[i]);
        os << '\n';
    }
}

FrontTrace read_trace_csv(std::istream& is) {
    FrontTrace tr;
    std::string line;
    std::getline(is, line);
    if (line.rfind("# kppfront front trace", 0) != 0) throw ConfigError("not a front trace file");
    std::istringstream hs(line.substr(1));
    std::string tok;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const auto k = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (k == "m") tr.m = std::stod(v);
        else if (k == "run") tr.run_id = v == "-" ? "" : v;
        else if (k == "dx") tr.dx = std::stod(v);
    }
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        tr.add(std::stod(a), std::stod(b));
    }
    return tr;
}

void write_fit_report(std::ostream& os, const AsymptoticFit& fit) {
    auto line = [&](const char* name, const FitTerm& term, const FitCoefficient& c) {
        if (term.mode == FitTerm::Off) return;
        os << fmt::format("{}: {:.10g}", name, c.value);
        if (term.mode == FitTerm::Fixed) os << " (fixed)";
        else os << fmt::format(" +- {:.3g}", c.stderr_);
        os << '\n';
    };
    line("speed", fit.model.speed, fit.speed);
    line("log_t", fit.model.log_t, fit.log_t);
    line("loglog_t", fit.model.loglog_t, fit.loglog_t);
    line("constant", fit.model.constant, fit.constant);
    os << fmt::format("window: [{:g}, {:g}]\nsamples: {}\nresidual_rms: {:.4g}\ncondition: {:.4g}\n", fit.window.lo,
                      fit.window.hi, fit.samples, fit.residual_rms, fit.condition);
}

}  // namespace kpp
