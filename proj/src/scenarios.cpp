#include "kppfront/scenarios.hpp"

#include "kppfront/barrier_check.hpp"
#include "kppfront/errors.hpp"
#include "kppfront/front_lab.hpp"
#include "kppfront/linear_tail.hpp"
#include "kppfront/rd_solver.hpp"
#include "kppfront/traveling_wave.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <thread>

namespace kpp {

namespace fs = std::filesystem;

namespace {

struct IdName {
    ScenarioId id;
    const char* name;
    const char* slug;
};

constexpr IdName kIds[] = {
    {ScenarioId::CriticalTail, "thm1-k>-3", "thm1-k-gt-minus3"},
    {ScenarioId::CriticalTailLogLog, "thm1-k=-3", "thm1-k-eq-minus3"},
    {ScenarioId::FlatTail, "thm2-nu", "thm2-nu"},
    {ScenarioId::SteepTail, "thm3-k<-3", "thm3-k-lt-minus3"},
    {ScenarioId::SingleWave, "thm4-single-wave", "thm4-single-wave"},
    {ScenarioId::FlatSingleWave, "thm5-nu-single-wave", "thm5-nu-single-wave"},
    {ScenarioId::LinearAsymptotics, "linear-asymptotics", "linear-asymptotics"},
    {ScenarioId::BarrierCertificates, "barrier-certificates", "barrier-certificates"},
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("key '{}': '{}' is not a number", key, v));
    }
    if (used != v.size() || !std::isfinite(x)) throw ConfigError(fmt::format("key '{}': '{}' is not a number", key, v));
    return x;
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

}  // namespace

const char* to_string(ScenarioId id) {
    for (const auto& e : kIds)
        if (e.id == id) return e.name;
    return "?";
}

std::string scenario_slug(ScenarioId id) {
    for (const auto& e : kIds)
        if (e.id == id) return e.slug;
    return "unknown";
}

ScenarioId scenario_from_string(const std::string& s) {
    std::string t = trim(s);
    // U+2212 MINUS SIGN
    for (std::size_t p; (p = t.find("\xe2\x88\x92")) != std::string::npos;) t.replace(p, 3, "-");
    for (const auto& e : kIds)
        if (t == e.name || t == e.slug) return e.id;
    std::string known;
    for (const auto& e : kIds) known += fmt::format("{}{}", known.empty() ? "" : ", ", e.name);
    throw ConfigError(fmt::format("unknown scenario '{}' (known: {})", s, known));
}

std::vector<ScenarioId> all_scenarios() {
    std::vector<ScenarioId> out;
    for (const auto& e : kIds) out.push_back(e.id);
    return out;
}

// ---- configuration ---------------------------------------------------------------------

ScenarioConfig ScenarioConfig::defaults(ScenarioId id) {
    ScenarioConfig c;
    c.scenario = id;
    switch (id) {
        case ScenarioId::CriticalTail:
            c.k = 0.0;
            break;
        case ScenarioId::CriticalTailLogLog:
            // a short join keeps the O(1) mass of the datum small; it biases ln ln t fits
            c.k = -3.0;
            c.A = 2.0;
            c.window_lo = 1e3;
            c.window_hi = 1e5;
            break;
        case ScenarioId::FlatTail:
        case ScenarioId::FlatSingleWave:
            c.nu = 1.0;
            c.lambda = 0.5;
            break;
        case ScenarioId::SteepTail:
            c.k = -4.0;
            c.A = 2.0;
            c.t_end = 1e6;
            c.window_lo = 200.0;
            c.window_hi = 5000.0;
            break;
        case ScenarioId::SingleWave:
            c.k = 0.0;
            break;
        case ScenarioId::LinearAsymptotics:
            c.t_end = 1e4;
            c.window_lo = 100.0;
            break;
        case ScenarioId::BarrierCertificates:
            c.t_end = 1e3;
            c.k = 0.0;
            c.nu = 1.0;
            c.lambda = 0.5;
            break;
    }
    return c;
}

KppNonlinearity ScenarioConfig::nonlinearity() const {
    if (f == "fisher") return KppNonlinearity::fisher();
    if (f.rfind("fisher:", 0) == 0) {
        const double r = parse_number("f", f.substr(7));
        if (!(r > 0.0)) throw ConfigError("fisher rate must be positive");
        return KppNonlinearity::fisher(r);
    }
    throw ConfigError(fmt::format("unknown nonlinearity '{}' (use fisher or fisher:<rate>)", f));
}

void ScenarioConfig::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    const auto f0 = nonlinearity().fprime0();
    need(dx > 0.0 && dt > 0.0, "dx and dt must be positive");
    need(t_end > 0.0, "t_end must be positive");
    need(m > 0.0 && m < 1.0, "level m must lie in (0, 1)");
    need(a1 > 0.0 && a1 <= a2, "need 0 < a1 <= a2");
    need(A > 0.0, "junction A must be positive");
    need(window_lo >= 0.0 && window_hi >= 0.0, "fit window must be nonnegative");
    if (window_lo > 0.0 && window_hi > 0.0) need(window_lo < window_hi, "window_lo must be below window_hi");
    const double hi = window_hi > 0.0 ? window_hi : t_end;
    need(hi <= t_end, "window_hi exceeds t_end");
    const bool flat = scenario == ScenarioId::FlatTail || scenario == ScenarioId::FlatSingleWave;
    if (flat) need(lambda > 0.0 && lambda < std::sqrt(f0), "flat tails need 0 < lambda < lambda* = sqrt(f'(0))");
    switch (scenario) {
        case ScenarioId::CriticalTail: need(k > -3.0, "thm1-k>-3 needs k > -3"); break;
        case ScenarioId::CriticalTailLogLog: need(k == -3.0, "thm1-k=-3 needs k = -3"); break;
        case ScenarioId::SteepTail: need(k < -3.0, "thm3-k<-3 needs k < -3"); break;
        case ScenarioId::SingleWave:
            need(a1 == a2, "thm4-single-wave needs a1 = a2");
            need(k >= -3.0, "thm4-single-wave needs k >= -3");
            break;
        case ScenarioId::FlatSingleWave: need(a1 == a2, "thm5-nu-single-wave needs a1 = a2"); break;
        case ScenarioId::BarrierCertificates:
            need(lambda > 0.0 && lambda < std::sqrt(f0), "barrier H2 cases need 0 < lambda < lambda*");
            break;
        default: break;
    }
}

void ScenarioConfig::set(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "scenario") scenario = scenario_from_string(v);
    else if (key == "f") f = v;
    else if (key == "k") k = parse_number(key, v);
    else if (key == "nu") nu = parse_number(key, v);
    else if (key == "lambda") lambda = parse_number(key, v);
    else if (key == "a1") a1 = parse_number(key, v);
    else if (key == "a2") a2 = parse_number(key, v);
    else if (key == "A") A = parse_number(key, v);
    else if (key == "dx") dx = parse_number(key, v);
    else if (key == "dt") dt = parse_number(key, v);
    else if (key == "t_end") t_end = parse_number(key, v);
    else if (key == "m") m = parse_number(key, v);
    else if (key == "window_lo") window_lo = parse_number(key, v);
    else if (key == "window_hi") window_hi = parse_number(key, v);
    else if (key == "outdir") outdir = v;
    else if (key == "seed") {
        const double s = parse_number(key, v);
        if (s < 0.0 || s != std::floor(s)) throw ConfigError("seed must be a nonnegative integer");
        seed = static_cast<std::uint64_t>(s);
    } else {
        throw ConfigError(fmt::format("unknown key '{}'", key));
    }
}

std::map<std::string, std::string> ScenarioConfig::to_map() const {
    return {{"scenario", to_string(scenario)},
            {"f", f},
            {"k", num(k)},
            {"nu", num(nu)},
            {"lambda", num(lambda)},
            {"a1", num(a1)},
            {"a2", num(a2)},
            {"A", num(A)},
            {"dx", num(dx)},
            {"dt", num(dt)},
            {"t_end", num(t_end)},
            {"m", num(m)},
            {"window_lo", num(window_lo)},
            {"window_hi", num(window_hi)},
            {"outdir", outdir},
            {"seed", std::to_string(seed)}};
}

ScenarioConfig parse_config(std::istream& is) {
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key = value", lineno));
        kv.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    auto it = std::find_if(kv.begin(), kv.end(), [](const auto& p) { return p.first == "scenario"; });
    if (it == kv.end()) throw ConfigError("config has no 'scenario' key");
    ScenarioConfig c = ScenarioConfig::defaults(scenario_from_string(it->second));
    for (const auto& [k, v] : kv)
        if (k != "scenario") c.set(k, v);
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
    return parse_config(in);
}

void write_config(std::ostream& os, const ScenarioConfig& c) {
    const auto m = c.to_map();
    os << "scenario = " << m.at("scenario") << "\n";
    for (const auto& [k, v] : m)
        if (k != "scenario") os << k << " = " << v << "\n";
}

// ---- checks and records ----------------------------------------------------------------

Check Check::near(std::string name, double value, double predicted, double tol, std::string note) {
    Check c{std::move(name), Near, value, predicted, tol, false, std::move(note)};
    c.pass = std::abs(value - predicted) <= tol;
    return c;
}

Check Check::at_most(std::string name, double value, double bound, std::string note) {
    Check c{std::move(name), AtMost, value, 0.0, bound, false, std::move(note)};
    c.pass = value <= bound;
    return c;
}

Check Check::flag(std::string name, bool ok, std::string note) {
    return Check{std::move(name), Flag, ok ? 1.0 : 0.0, 1.0, 0.0, ok, std::move(note)};
}

Check Check::info(std::string name, double value, std::string note) {
    return Check{std::move(name), Info, value, 0.0, 0.0, true, std::move(note)};
}

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Pass: return "pass";
        case RunStatus::AcceptanceFailure: return "acceptance-failure";
        case RunStatus::NumericalFailure: return "numerical-failure";
        case RunStatus::ConfigFailure: return "config-error";
    }
    return "?";
}

RunStatus run_status_from_string(const std::string& s) {
    for (auto st : {RunStatus::Pass, RunStatus::AcceptanceFailure, RunStatus::NumericalFailure, RunStatus::ConfigFailure})
        if (s == to_string(st)) return st;
    throw ConfigError(fmt::format("unknown run status '{}'", s));
}

const Check* ResultRecord::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

int exit_code(const std::vector<ResultRecord>& records) {
    int code = 0;
    for (const auto& r : records) {
        switch (r.status) {
            case RunStatus::Pass: break;
            case RunStatus::AcceptanceFailure: code = std::max(code, 2); break;
            case RunStatus::NumericalFailure: code = std::max(code, 3); break;
            case RunStatus::ConfigFailure: code = std::max(code, 4); break;
        }
    }
    return code;
}

// ---- scenario bodies -------------------------------------------------------------------

namespace {

struct Run {
    const ScenarioConfig& cfg;
    ResultRecord& rec;
    fs::path dir;
    KppNonlinearity f;

    std::string artifact(const std::string& name) {
        const auto p = dir / name;
        rec.artifacts.push_back(p.string());
        return p.string();
    }
    void add(Check c) { rec.checks.push_back(std::move(c)); }
};

GridSpec grid_for(const ScenarioConfig& c) {
    GridSpec g;
    g.dx = c.dx;
    g.left = -40.0;
    g.uniform_end = 60.0;
    g.right = 150.0;
    return g;
}

SolverOptions solver_for(const ScenarioConfig& c) {
    SolverOptions o;
    o.dt = c.dt;
    o.scheme = TimeScheme::Sbdf2;
    return o;
}

SpeedPair critical_pair(const KppNonlinearity& f) { return lambda_of_c(2.0 * std::sqrt(f.fprime0()), f.fprime0()); }

SpeedPair flat_pair(const KppNonlinearity& f, double lambda) {
    return lambda_of_c(speed_of_lambda(lambda, f.fprime0()), f.fprime0());
}

FitWindow window_of(const ScenarioConfig& c) {
    return {c.window_lo > 0.0 ? c.window_lo : c.t_end / 10.0, c.window_hi > 0.0 ? c.window_hi : c.t_end};
}

/// Level-set trace of a run from t = 10 to t_end at 64 samples per decade; optionally also
/// the optimal wave shift at 8 samples per decade from t = 100.
struct TrackResult {
    FrontTrace trace;
    std::vector<double> wave_t;
    std::vector<ShiftMatch> matches;
    FieldSnapshot last;
};

TrackResult track(RdSolver& solver, double t_end, double m, double dx, const WaveProfile* wave,
                  const std::string& run_id) {
    TrackResult out;
    out.trace.m = m;
    out.trace.run_id = run_id;
    out.trace.dx = dx;
    const double t0 = std::min(10.0, t_end / 10.0);
    auto ts = log_grid(t0, t_end, 64);
    std::vector<double> wt;
    if (wave && t_end > 100.0) wt = log_grid(100.0, t_end, 8);
    std::vector<double> all = ts;
    all.insert(all.end(), wt.begin(), wt.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::size_t next_wave = 0;
    solver.run_until(
        t_end,
        [&](const FieldSnapshot& s) {
            if (auto X = level_set(s, m)) {
                if (out.trace.t.empty() || s.t > out.trace.t.back()) out.trace.add(s.t, *X);
            }
            if (wave) {
                bool due = false;
                while (next_wave < wt.size() && wt[next_wave] <= s.t + 1e-9) {
                    due = true;
                    ++next_wave;
                }
                if (due) {
                    out.wave_t.push_back(s.t);
                    out.matches.push_back(optimal_shift(s, *wave));
                }
            }
        },
        all);
    out.last = solver.state();
    return out;
}

void persist_trace(Run& run, const TrackResult& tr, double c, const std::string& name) {
    std::ofstream os(run.artifact(name));
    write_trace_csv(os, tr.trace, c);
}

void persist_fit(Run& run, const AsymptoticFit& fit, const std::string& name) {
    std::ofstream os(run.artifact(name));
    write_fit_report(os, fit);
}

/// Distance below 0.02 at t_end, no increase beyond the grid floor over the last decade,
/// sigma drift below 0.05 over the last two decades.
SigmaEstimate wave_checks(Run& run, const TrackResult& tr, const std::function<double(double)>& law,
                          const std::string& suffix) {
    if (tr.matches.empty()) throw DomainError("wave convergence needs t_end > 100");
    const double t_end = tr.wave_t.back();
    run.add(Check::at_most("wave_distance_at_t_end" + suffix, tr.matches.back().distance, 0.02));
    // the numerical front differs from the exact wave by O(dx^2); below that the distance
    // only fluctuates
    const double floor = run.cfg.dx * run.cfg.dx / 20.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < tr.wave_t.size(); ++i) {
        if (tr.wave_t[i - 1] < t_end / 10.0 * (1 - 1e-9)) continue;
        worst = std::max(worst, tr.matches[i].distance - tr.matches[i - 1].distance);
    }
    run.add(Check::at_most("wave_distance_increase_last_decade" + suffix, worst, floor,
                           fmt::format("largest step-to-step increase; floor dx^2/20 = {:.3g}", floor)));
    auto est = estimate_sigma_infinity(tr.wave_t, tr.matches, law);
    run.add(Check::at_most("sigma_drift_last_two_decades" + suffix, est.last_two_decades_drift, 0.05, est.warning));
    run.add(Check::info("sigma_infinity" + suffix, est.value, "relative to the unit tail normalisation"));
    {
        std::ofstream os(run.artifact("sigma" + suffix + ".csv"));
        os << "# kppfront sigma trace v1\n" << "t,shift,distance,sigma\n";
        for (std::size_t i = 0; i < est.t.size(); ++i)
            os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", est.t[i], est.shift[i], est.distance[i], est.sigma[i]);
    }
    return est;
}

double interp_log(const FieldSnapshot& s, double y) {
    auto it = std::upper_bound(s.y.begin(), s.y.end(), y);
    if (it == s.y.begin() || it == s.y.end()) throw RangeError("point outside the snapshot grid");
    const std::size_t i = static_cast<std::size_t>(it - s.y.begin());
    const double a = s.values[i - 1], b = s.values[i];
    const double w = (y - s.y[i - 1]) / (s.y[i] - s.y[i - 1]);
    if (s.log_scale) return std::exp((1.0 - w) * a + w * b);
    if (a > 0.0 && b > 0.0) return std::exp((1.0 - w) * std::log(a) + w * std::log(b));
    return (1.0 - w) * a + w * b;
}

void scenario_critical(Run& run) {
    const auto& c = run.cfg;
    const auto sp = critical_pair(run.f);
    RdSolver solver(run.f, FrontInitialData::h1(c.a1, c.a2, c.k, sp.lambda_star, c.A, c.seed), Frame::leading_edge(sp),
                    grid_for(c), solver_for(c));
    const auto tr = track(solver, c.t_end, c.m, c.dx, nullptr, "h1");
    persist_trace(run, tr, sp.c, "trace.csv");
    FitModel model;
    model.speed = FitTerm::fixed(sp.c);
    const auto fit = fit_shift(tr.trace, model, window_of(c));
    persist_fit(run, fit, "fit.txt");
    run.add(Check::near("log_t_coefficient", fit.log_t.value, c.k / (2.0 * sp.lambda_star), 0.15));

    // leading-edge value against the linear sandwich at y = t^{1/5}. The prefactor is taken
    // along that curve (y << sqrt t), and B+- = 1 +- t^{-gamma}. Near the front v behaves
    // like a (y - Y + b), with Y the front's offset from c* t and b the wave's subleading
    // tail constant, so both sides carry the factor 1 +- D/y, D = |Y| + |b|. The band says
    // nothing until y > D; at desk times that excludes k = 2, where Y ~ ln t.
    const double t = tr.last.t;
    const double y = std::pow(t, 0.2);
    const auto rule = [](double s) { return std::pow(s, 0.2); };
    const auto pre = estimate_prefactor(TailInitialData::h1(c.k), log_grid(std::min(100.0, t), t, 4), rule);
    const double varpi0 = pre.constants.varpi;
    const double shape = varpi0 * y * std::exp(-y * y / (4.0 * t)) * std::pow(t, 0.5 * c.k);
    const double ratio = interp_log(tr.last, y) / shape;
    const double B = std::pow(t, -BarrierParams::defaults(BarrierKind::H1Lower, c.k).gamma);
    const double Y = tr.trace.X.back() - sp.c * tr.trace.t.back();
    const double D = std::abs(Y) + std::abs(solve_profile(run.f, sp.c).tail_b());
    const double lo = c.a1 * (1.0 - B) * std::max(0.0, 1.0 - D / y), hi = c.a2 * (1.0 + B) * (1.0 + D / y);
    run.add(Check::near("leading_edge_sandwich_ratio", ratio, 0.5 * (lo + hi), 0.5 * (hi - lo),
                        fmt::format("v / (varpi shape) at y = t^(1/5) = {:.4g}, t = {:g}; band [{:.4g}, {:.4g}], "
                                    "varpi = {:.6g}, D = {:.4g}{}",
                                    y, t, lo, hi, varpi0, D, D < y ? "" : "; y <= D, band not informative")));

    if (c.k == 0.0 && c.a1 == 1.0 && c.a2 == 1.0) {
        // the exact wave translates without a logarithmic delay
        auto W = std::make_shared<const WaveProfile>(solve_profile(run.f, sp.c));
        const double z_m = profile_inverse(*W, c.m);
        RdSolver ws(run.f, FrontInitialData::wave(W), Frame::leading_edge(sp), grid_for(c), solver_for(c));
        const double t_wave = std::min(c.t_end, 1e4);
        double worst = 0.0;
        ws.run_until(
            t_wave,
            [&](const FieldSnapshot& s) {
                if (auto X = level_set(s, c.m)) worst = std::max(worst, std::abs(*X - sp.c * s.t - z_m));
            },
            log_grid(1.0, t_wave, 16));
        run.add(Check::at_most("wave_data_translation_error", worst, 2.0 * c.dx,
                               fmt::format("max |X - c* t - U^-1(m)| over t in [1, {:g}]", t_wave)));
    }
}

void scenario_loglog(Run& run) {
    const auto& c = run.cfg;
    const auto sp = critical_pair(run.f);
    RdSolver solver(run.f, FrontInitialData::h1(c.a1, c.a2, c.k, sp.lambda_star, c.A, c.seed), Frame::leading_edge(sp),
                    grid_for(c), solver_for(c));
    const auto tr = track(solver, c.t_end, c.m, c.dx, nullptr, "h1");
    persist_trace(run, tr, sp.c, "trace.csv");
    FitModel model;
    model.speed = FitTerm::fixed(sp.c);
    model.log_t = FitTerm::fixed(-1.5 / sp.lambda_star);
    model.loglog_t = FitTerm::free();
    const auto fit = fit_shift(tr.trace, model, window_of(c));
    persist_fit(run, fit, "fit.txt");
    run.add(Check::near("loglog_t_coefficient", fit.loglog_t.value, 1.0 / sp.lambda_star, 0.35,
                        fmt::format("c and the ln t coefficient pinned; condition number {:.3g}", fit.condition)));
}

void scenario_flat(Run& run) {
    const auto& c = run.cfg;
    const auto sp = flat_pair(run.f, c.lambda);
    RdSolver solver(run.f, FrontInitialData::h2(c.a1, c.a2, c.nu, c.lambda, c.A, c.seed), Frame::flat(sp), grid_for(c),
                    solver_for(c));
    const auto tr = track(solver, c.t_end, c.m, c.dx, nullptr, "h2");
    persist_trace(run, tr, sp.c, "trace.csv");
    FitModel free_speed;
    free_speed.speed = FitTerm::free();
    const auto fit_c = fit_shift(tr.trace, free_speed, window_of(c));
    persist_fit(run, fit_c, "fit_free_speed.txt");
    run.add(Check::near("speed", fit_c.speed.value, sp.c, 0.02));
    FitModel fixed_speed;
    fixed_speed.speed = FitTerm::fixed(sp.c);
    const auto fit = fit_shift(tr.trace, fixed_speed, window_of(c));
    persist_fit(run, fit, "fit.txt");
    const double a = c.nu / c.lambda;
    run.add(Check::near("log_t_coefficient", fit.log_t.value, a, 0.2 * std::abs(a) + 0.1));
}

void scenario_steep(Run& run) {
    const auto& c = run.cfg;
    const auto sp = critical_pair(run.f);
    const WaveProfile W = solve_profile(run.f, sp.c);
    const FitWindow win = window_of(c);
    FitModel model;
    model.speed = FitTerm::fixed(sp.c);
    const double bramson = -1.5 / sp.lambda_star;

    RdSolver solver(run.f, FrontInitialData::h1(c.a1, c.a2, c.k, sp.lambda_star, c.A, c.seed), Frame::leading_edge(sp),
                    grid_for(c), solver_for(c));
    const auto tr = track(solver, c.t_end, c.m, c.dx, &W, "h1");
    persist_trace(run, tr, sp.c, "trace.csv");
    const auto fit = fit_shift(tr.trace, model, win);
    persist_fit(run, fit, "fit.txt");
    run.add(Check::near("log_t_coefficient", fit.log_t.value, bramson, 0.15));

    RdSolver loc(run.f, FrontInitialData::localized(), Frame::leading_edge(sp), grid_for(c), solver_for(c));
    const auto tl = track(loc, win.hi, c.m, c.dx, nullptr, "localized");
    persist_trace(run, tl, sp.c, "trace_localized.csv");
    const auto fit_l = fit_shift(tl.trace, model, win);
    persist_fit(run, fit_l, "fit_localized.txt");
    run.add(Check::near("log_t_coefficient_localized", fit_l.log_t.value, bramson, 0.15));

    wave_checks(run, tr, drift_law_critical(sp, c.k), "");
}

void scenario_single_wave(Run& run) {
    const auto& c = run.cfg;
    const auto sp = critical_pair(run.f);
    const WaveProfile W = solve_profile(run.f, sp.c);
    RdSolver solver(run.f, FrontInitialData::h1(c.a1, c.a2, c.k, sp.lambda_star, c.A, c.seed), Frame::leading_edge(sp),
                    grid_for(c), solver_for(c));
    const auto tr = track(solver, c.t_end, c.m, c.dx, &W, "h1");
    persist_trace(run, tr, sp.c, "trace.csv");
    wave_checks(run, tr, drift_law_critical(sp, c.k), "");
}

void scenario_flat_single_wave(Run& run) {
    const auto& c = run.cfg;
    const auto sp = flat_pair(run.f, c.lambda);
    const WaveProfile W = solve_profile(run.f, sp.c);
    const auto law = drift_law_flat(sp, c.nu);
    std::vector<double> sig;
    for (double scale : {1.0, 2.0}) {
        const double a = scale * c.a1;
        RdSolver solver(run.f, FrontInitialData::h2(a, a, c.nu, c.lambda, c.A, c.seed), Frame::flat(sp), grid_for(c),
                        solver_for(c));
        const auto tr = track(solver, c.t_end, c.m, c.dx, &W, scale == 1.0 ? "h2" : "h2-doubled");
        const std::string suffix = scale == 1.0 ? "" : "_doubled";
        persist_trace(run, tr, sp.c, "trace" + suffix + ".csv");
        sig.push_back(wave_checks(run, tr, law, suffix).value);
    }
    const double pred = std::log(2.0) / c.lambda;
    run.add(Check::near("sigma_shift_when_doubling_a", sig[1] - sig[0], pred, 0.1 * pred));
}

void scenario_linear(Run& run) {
    const auto& c = run.cfg;
    const double t_lo = c.window_lo > 0.0 ? c.window_lo : 100.0;
    const auto grid = log_grid(t_lo, c.t_end, 4);
    auto half_root = [](double t) { return 0.5 * std::sqrt(t); };
    auto persist = [&](const std::string& name, const TailInitialData& w0, const PrefactorEstimate& e, Regime reg,
                       double rho) {
        std::ofstream os(run.artifact(name));
        write_ratio_csv(os, e, [&](double t, double y) {
            return predict_asymptotic(e.constants, w0.family(), w0.exponent(), LinearSolutionQuery{t, y, reg, rho}, t_lo);
        });
    };
    for (double k : {-4.0, -3.0, -1.0, 0.0, 2.0}) {
        const auto w0 = TailInitialData::h1(k);
        PrefactorOptions opt;
        opt.t_min = t_lo;
        const auto e = estimate_prefactor(w0, grid, half_root, opt);
        persist(fmt::format("ratio_h1_k{:g}.csv", k), w0, e, Regime::Diffusive, 0.0);
        run.add(Check::at_most(fmt::format("ratio_drift_k={:g}", k), e.max_drift, 0.10,
                               fmt::format("varpi = {:.6g}", e.constants.varpi)));
    }
    // flat data along the ray y = rho t, rho = c - 2 lambda, offset by sqrt(t)/2
    const auto sp = flat_pair(run.f, c.lambda);
    const double rho = sp.c - 2.0 * c.lambda;
    for (double nu : {-1.0, 1.0, 2.0}) {
        const auto w0 = TailInitialData::h2(nu);
        PrefactorOptions opt;
        opt.regime = Regime::Ballistic;
        opt.rho = rho;
        opt.t_min = t_lo;
        const auto e = estimate_prefactor(w0, grid, [rho](double t) { return rho * t + 0.5 * std::sqrt(t); }, opt);
        persist(fmt::format("ratio_h2_nu{:g}.csv", nu), w0, e, Regime::Ballistic, rho);
        run.add(Check::at_most(fmt::format("ratio_drift_nu={:g}", nu), e.max_drift, 0.10,
                               fmt::format("Lambda = {:.6g} on rho = {:g}", e.constants.lambda_big, rho)));
    }
    // cubic datum: small-y limit of p / (y t) is 6
    const auto cubic = TailInitialData::cubic();
    PrefactorOptions opt;
    opt.t_min = t_lo;
    const auto e = estimate_prefactor(cubic, grid, [](double) { return 1.0; }, opt);
    persist("ratio_cubic.csv", cubic, e, Regime::Diffusive, 0.0);
    run.add(Check::near("cubic_varpi", e.constants.varpi, 6.0, 0.06));
}

// -- barrier certificates --

/// Solver values in a barrier's variables, read from snapshots taken exactly at the lattice
/// times. Left of the grid u = 1; right of it the solver's rigorous upper bound (an upper
/// estimate of the solution there); at t = 0 the datum itself. All kinds compare in the
/// solver frame's phi: for the z kind the certificate divides by e^{(mu/2) r}, which turns
/// z into the flat-frame phi.
class SnapshotOracle {
public:
    SnapshotOracle(const RdSolver& solver, const BarrierSpec& b) : solver_(solver), b_(b) {}
    void add(const FieldSnapshot& s) { snaps_.emplace(s.t, s); }
    double operator()(double t, double r) const {
        const Frame& fr = solver_.state().frame;
        const double y = barrier_x(b_, t, r) - fr.speed * t;
        if (t == 0.0) return solver_.data().weighted(y, fr.weight);
        auto it = snaps_.find(t);
        if (it == snaps_.end()) throw DomainError(fmt::format("no snapshot at t = {:g}", t));
        const auto& s = it->second;
        if (y <= s.y.front()) return std::exp(fr.weight * y);
        if (y < s.y.back()) return interp_log(s, y);
        return std::exp(fr.weight * y + solver_.log_upper_bound(t, y + fr.speed * t));
    }

private:
    const RdSolver& solver_;
    const BarrierSpec& b_;
    std::map<double, FieldSnapshot> snaps_;
};

struct BarrierCase {
    std::string label;
    BarrierSetup setup;
};

void scenario_barriers(Run& run) {
    const auto& c = run.cfg;
    const auto f0 = run.f.fprime0();
    const auto crit = critical_pair(run.f);
    SamplingPlan full;
    full.t_hi = c.t_end;
    TuneOptions opt;
    opt.full = full;
    opt.screen.t_hi = c.t_end;

    auto report = [&](const std::string& label, const Certificate& cert) {
        {
            std::ofstream os(run.artifact("certificate_" + label + ".txt"));
            write_certificate(os, cert);
        }
        std::ofstream os(run.artifact("certificate_" + label + ".csv"));
        write_certificate_csv(os, cert);
    };

    std::vector<BarrierCase> cases;
    for (double k : {0.0, -2.0}) {
        for (auto kind : {BarrierKind::H1Upper, BarrierKind::H1Lower}) {
            BarrierSetup s;
            s.kind = kind;
            s.f = run.f;
            s.exponent = k;
            s.a1 = c.a1;
            s.a2 = c.a2;
            s.A = c.A;
            cases.push_back({fmt::format("{}_k{:g}", to_string(kind), k), s});
        }
    }
    {
        BarrierSetup s;
        s.kind = BarrierKind::H2LowerZ;
        s.f = run.f;
        s.exponent = c.nu;
        s.lambda = c.lambda;
        s.a1 = c.a1;
        s.a2 = c.a2;
        s.A = c.A;
        cases.push_back({fmt::format("H2-lower-z_nu{:g}", c.nu), s});
    }

    for (const auto& bc : cases) {
        try {
            auto res = autotune_T(bc.setup, BarrierParams::defaults(bc.setup.kind, bc.setup.exponent), opt);
            const BarrierSpec spec(bc.setup, res.params);
            // ordering against the solver in the barrier's frame
            const bool z = bc.setup.kind == BarrierKind::H2LowerZ;
            const auto sp = z ? flat_pair(run.f, c.lambda) : crit;
            const FrontInitialData data = z ? FrontInitialData::h2(c.a1, c.a2, c.nu, c.lambda, c.A, c.seed)
                                            : FrontInitialData::h1(c.a1, c.a2, bc.setup.exponent, sp.lambda_star, c.A,
                                                                   c.seed);
            RdSolver solver(run.f, data, z ? Frame::flat(sp) : Frame::leading_edge(sp), grid_for(c), solver_for(c));
            SnapshotOracle oracle(solver, spec);
            for (double t : lattice_times(full)) oracle.add(solver.run_until(t));
            const auto cert = certify(spec, full, std::cref(oracle));
            report(bc.label, cert);
            run.add(Check::flag("certified_" + bc.label, cert.sign_ok(),
                                fmt::format("T = {:g}, M = {:.3g}; {} sign violations", res.params.T, res.params.M,
                                            cert.sign_violations)));
            run.add(Check::flag("ordered_" + bc.label, cert.ordering_violations == 0,
                                fmt::format("{} ordering violations", cert.ordering_violations)));
        } catch (const NumericalError& e) {
            run.add(Check::flag("certified_" + bc.label, false, e.what()));
        }
    }

    // k < -3: restart from the leading-edge solution at time T; junction 1.1 keeps T^delta > A
    // reachable with the low restart ladder
    {
        const double k = std::min(c.k, -4.0);
        const double A_restart = 1.1;
        RdSolver solver(run.f, FrontInitialData::h1(c.a1, c.a2, k, crit.lambda_star, A_restart, c.seed),
                        Frame::leading_edge(crit), grid_for(c), solver_for(c));
        std::map<double, TailInitialData> cache;
        auto restart_at = [&](double T) {
            auto it = cache.find(T);
            if (it != cache.end()) return it->second;
            if (T < solver.state().t) throw TuningError("restart datum requested before the current solver time");
            const auto w = restart_datum(solver.run_until(T), k);
            cache.emplace(T, w);
            return w;
        };
        TuneOptions ropt = opt;
        ropt.T_start = 256.0;
        ropt.T_max = std::pow(2.0, 21);
        for (auto kind : {BarrierKind::H1UpperRestart, BarrierKind::H1LowerRestart}) {
            BarrierSetup s;
            s.kind = kind;
            s.f = run.f;
            s.exponent = k;
            s.a1 = c.a1;
            s.a2 = c.a2;
            s.A = A_restart;
            const std::string label = fmt::format("{}_k{:g}", to_string(kind), k);
            try {
                auto res = autotune_T(s, BarrierParams::defaults(kind, k), ropt, restart_at);
                report(label, res.certificate);
                const auto env = restart_envelope(restart_at(res.params.T), res.params.T, res.params.delta_s);
                run.add(Check::flag("certified_" + label, res.certificate.sign_ok(),
                                    fmt::format("T = {:g}, M = {:.3g}; residual signs only, the datum is the solution at T",
                                                res.params.T, res.params.M)));
                run.add(Check::flag("restart_envelope_" + label, env.C1 > 0.0 && env.C1 < env.C2,
                                    fmt::format("C1 = {:.4g}, C2 = {:.4g}", env.C1, env.C2)));
            } catch (const NumericalError& e) {
                run.add(Check::flag("certified_" + label, false, e.what()));
            }
        }
    }

    // negative control: beta above the ladder's ceiling
    {
        BarrierSetup s;
        s.kind = BarrierKind::H1Lower;
        s.f = run.f;
        s.exponent = 0.0;
        s.A = c.A;
        auto broken = BarrierParams::defaults(s.kind, 0.0);
        broken.beta = 0.45;
        bool rejected = false;
        std::string why;
        try {
            autotune_T(s, broken, opt);
        } catch (const TuningError& e) {
            rejected = true;
            why = e.what();
        }
        broken.T = 1e7;
        const auto cert = certify(BarrierSpec(s, broken), SamplingPlan::coarse());
        report("negative_control", cert);
        std::string zones;
        for (const auto& zs : cert.zones)
            if (zs.violations > 0) zones += fmt::format("{}{}={}", zones.empty() ? "" : ", ", to_string(zs.zone), zs.violations);
        run.add(Check::flag("negative_control_rejected", rejected && !cert.passed(),
                            fmt::format("{}; fixed-T certificate: {} sign violations ({})", why, cert.sign_violations,
                                        zones.empty() ? "none" : zones)));
    }
    (void)f0;
}

void dispatch(Run& run) {
    switch (run.cfg.scenario) {
        case ScenarioId::CriticalTail: scenario_critical(run); break;
        case ScenarioId::CriticalTailLogLog: scenario_loglog(run); break;
        case ScenarioId::FlatTail: scenario_flat(run); break;
        case ScenarioId::SteepTail: scenario_steep(run); break;
        case ScenarioId::SingleWave: scenario_single_wave(run); break;
        case ScenarioId::FlatSingleWave: scenario_flat_single_wave(run); break;
        case ScenarioId::LinearAsymptotics: scenario_linear(run); break;
        case ScenarioId::BarrierCertificates: scenario_barriers(run); break;
    }
}

}  // namespace

ResultRecord run_scenario(const ScenarioConfig& cfg) {
    ResultRecord rec;
    rec.scenario = to_string(cfg.scenario);
    rec.config = cfg.to_map();
    const auto t0 = std::chrono::steady_clock::now();
    try {
        cfg.validate();
        const fs::path dir = fs::path(cfg.outdir) / scenario_slug(cfg.scenario);
        fs::create_directories(dir);
        {
            std::ofstream os(dir / "config.txt");
            write_config(os, cfg);
        }
        Run run{cfg, rec, dir, cfg.nonlinearity()};
        dispatch(run);
        const bool ok = std::all_of(rec.checks.begin(), rec.checks.end(), [](const Check& c) { return c.pass; });
        rec.status = ok ? RunStatus::Pass : RunStatus::AcceptanceFailure;
        if (!ok) {
            std::string failed;
            for (const auto& c : rec.checks)
                if (!c.pass) failed += fmt::format("{}{}", failed.empty() ? "" : ", ", c.name);
            rec.message = "failed: " + failed;
        }
    } catch (const ConfigError& e) {
        rec.status = RunStatus::ConfigFailure;
        rec.message = e.what();
    } catch (const std::exception& e) {
        rec.status = RunStatus::NumericalFailure;
        rec.message = e.what();
    }
    rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

std::vector<ResultRecord> run_scenarios(const std::vector<ScenarioConfig>& cfgs, unsigned threads) {
    std::vector<ResultRecord> out(cfgs.size());
    const unsigned n = std::max(1u, std::min<unsigned>(threads ? threads : std::thread::hardware_concurrency(),
                                                       static_cast<unsigned>(cfgs.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < n; ++w)
        jobs.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next++; i < cfgs.size(); i = next++) out[i] = run_scenario(cfgs[i]);
        }));
    for (auto& j : jobs) j.get();
    return out;
}

}  // namespace kpp
