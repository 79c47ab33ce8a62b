// frontlab: command-line access to the profile solver, the linear tail, the PDE solver,
// front tracking, fits, barrier certificates and the scenario runner.
#include "kppfront/barrier_check.hpp"
#include "kppfront/errors.hpp"
#include "kppfront/front_lab.hpp"
#include "kppfront/linear_tail.hpp"
#include "kppfront/rd_solver.hpp"
#include "kppfront/report.hpp"
#include "kppfront/scenarios.hpp"
#include "kppfront/traveling_wave.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>

using namespace kpp;

namespace {

// Every config key as a string flag; only the ones given are applied.
struct KeyFlags {
    std::map<std::string, std::string> values;
    std::string config_path;

    void attach(CLI::App* app, bool with_scenario) {
        app->add_option("--config", config_path, "key = value config file (applied before the flags)");
        for (const char* key : {"f", "k", "nu", "lambda", "a1", "a2", "A", "dx", "dt", "t_end", "m", "window_lo",
                                "window_hi", "outdir", "seed"})
            app->add_option(std::string("--") + key, values[key]);
        if (with_scenario) app->add_option("--scenario", values["scenario"], "scenario id");
    }

    ScenarioConfig build(ScenarioId fallback) const {
        ScenarioConfig c = config_path.empty() ? ScenarioConfig::defaults(fallback) : load_config(config_path);
        auto it = values.find("scenario");
        if (it != values.end() && !it->second.empty()) {
            const auto id = scenario_from_string(it->second);
            if (config_path.empty()) c = ScenarioConfig::defaults(id);
            c.scenario = id;
        }
        for (const auto& [k, v] : values)
            if (k != "scenario" && !v.empty()) c.set(k, v);
        return c;
    }
};

std::ostream& open_out(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
    if (path.empty() || path == "-") return std::cout;
    holder = std::make_unique<std::ofstream>(path);
    if (!*holder) throw ConfigError(fmt::format("cannot write '{}'", path));
    return *holder;
}

SpeedPair pair_for(const ScenarioConfig& c, const std::string& family) {
    const double f0 = c.nonlinearity().fprime0();
    if (family == "h2") return lambda_of_c(speed_of_lambda(c.lambda, f0), f0);
    return lambda_of_c(2.0 * std::sqrt(f0), f0);
}

FrontInitialData data_for(const ScenarioConfig& c, const std::string& family) {
    const double ls = std::sqrt(c.nonlinearity().fprime0());
    if (family == "h1") return FrontInitialData::h1(c.a1, c.a2, c.k, ls, c.A, c.seed);
    if (family == "h2") return FrontInitialData::h2(c.a1, c.a2, c.nu, c.lambda, c.A, c.seed);
    if (family == "localized") return FrontInitialData::localized();
    throw ConfigError(fmt::format("unknown data family '{}' (h1, h2, localized)", family));
}

Frame frame_for(const std::string& name, const SpeedPair& sp) {
    if (name == "lab") return Frame::lab();
    if (name == "comoving") return Frame::comoving(sp.c);
    if (name == "leading-edge") return Frame::leading_edge(sp);
    if (name == "flat") return Frame::flat(sp);
    if (name == "half-speed") return Frame::half_speed(sp);
    throw ConfigError(fmt::format("unknown frame '{}'", name));
}

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

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"frontlab: KPP front asymptotics toolkit"};
    app.require_subcommand(1);

    // wave
    auto* wave = app.add_subcommand("wave", "traveling-wave profile as (z, U) text");
    std::string wave_f = "fisher", wave_out;
    double wave_c = 2.0;
    wave->add_option("--f", wave_f);
    wave->add_option("--c", wave_c, "wave speed (>= c*)");
    wave->add_option("-o,--out", wave_out);

    // linear
    auto* linear = app.add_subcommand("linear", "heat solution of a tail datum: ratio to the asymptotic predictor");
    std::string lin_family = "h1", lin_out;
    double lin_exp = 0.0, lin_t0 = 100.0, lin_t1 = 1e4, lin_rho = 0.0;
    int lin_per = 4;
    linear->add_option("--family", lin_family, "h1, h2 or cubic");
    linear->add_option("--exponent", lin_exp, "k for h1, nu for h2");
    linear->add_option("--t0", lin_t0);
    linear->add_option("--t1", lin_t1);
    linear->add_option("--per-decade", lin_per);
    linear->add_option("--rho", lin_rho, "ray speed; > 0 selects the ballistic regime on y = rho t + sqrt(t)/2");
    linear->add_option("-o,--out", lin_out);

    // simulate / track share the run flags
    KeyFlags sim_keys, track_keys;
    std::string sim_family = "h1", sim_frame = "leading-edge", sim_out, sim_from;
    auto* simulate = app.add_subcommand("simulate", "integrate to t_end and write a checkpoint");
    sim_keys.attach(simulate, false);
    simulate->add_option("--family", sim_family, "h1, h2 or localized");
    simulate->add_option("--frame", sim_frame, "lab, comoving, leading-edge, flat or half-speed");
    simulate->add_option("--from", sim_from, "start from a checkpoint instead of the datum");
    simulate->add_option("-o,--out", sim_out, "checkpoint path");

    std::string tr_family = "h1", tr_frame = "leading-edge", tr_out;
    int tr_per = 64;
    auto* trackc = app.add_subcommand("track", "integrate and write the level-set trace CSV");
    track_keys.attach(trackc, false);
    trackc->add_option("--family", tr_family, "h1, h2 or localized");
    trackc->add_option("--frame", tr_frame);
    trackc->add_option("--per-decade", tr_per);
    trackc->add_option("-o,--out", tr_out, "trace CSV path");

    // fit
    auto* fit = app.add_subcommand("fit", "fit X(t) = c t + a ln t [+ b ln ln t] + d to a trace CSV");
    std::string fit_in, fit_out;
    double fit_lo = 0.0, fit_hi = 0.0;
    std::optional<double> fit_c, fit_a;
    bool fit_loglog = false;
    fit->add_option("trace", fit_in, "trace CSV")->required();
    fit->add_option("--c", fit_c, "pin the speed (free when omitted)");
    fit->add_option("--a", fit_a, "pin the ln t coefficient");
    fit->add_flag("--loglog", fit_loglog, "add a free ln ln t term");
    fit->add_option("--window_lo", fit_lo);
    fit->add_option("--window_hi", fit_hi);
    fit->add_option("-o,--out", fit_out);

    // barrier
    auto* barrier = app.add_subcommand("barrier", "autotune T and certify a barrier on the lattice");
    std::string bar_kind = "H1-upper", bar_out, bar_csv;
    double bar_exp = 0.0, bar_lambda = 0.5, bar_A = 10.0, bar_T = 0.0, bar_thi = 1e3;
    bool bar_coarse = false;
    barrier->add_option("--kind", bar_kind, "H1-upper, H1-lower, H2-upper or H2-lower-z");
    barrier->add_option("--exponent", bar_exp, "k or nu");
    barrier->add_option("--lambda", bar_lambda);
    barrier->add_option("--A", bar_A);
    barrier->add_option("--T", bar_T, "certify at this T instead of autotuning");
    barrier->add_option("--t_hi", bar_thi, "last lattice time");
    barrier->add_flag("--coarse", bar_coarse, "screening lattice");
    barrier->add_option("-o,--out", bar_out, "certificate text");
    barrier->add_option("--csv", bar_csv, "per-zone CSV");

    // scenario
    KeyFlags sc_keys;
    std::vector<std::string> sc_ids;
    unsigned sc_threads = 0;
    bool sc_all = false;
    auto* scenario = app.add_subcommand("scenario", "run acceptance scenarios and write results.json + summary.txt");
    sc_keys.attach(scenario, true);
    scenario->add_option("ids", sc_ids, "scenario ids (in addition to --scenario)");
    scenario->add_flag("--all", sc_all, "every scenario with its defaults");
    scenario->add_option("--threads", sc_threads, "worker pool size (0: hardware)");

    // report
    auto* report = app.add_subcommand("report", "print the summary of a results.json");
    std::string rep_in;
    report->add_option("results", rep_in, "results.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (wave->parsed()) {
            ScenarioConfig c;
            c.f = wave_f;
            const auto W = solve_profile(c.nonlinearity(), wave_c);
            std::unique_ptr<std::ofstream> h;
            W.export_text(open_out(wave_out, h));
            return 0;
        }
        if (linear->parsed()) {
            TailInitialData w0 = lin_family == "h1"   ? TailInitialData::h1(lin_exp)
                                 : lin_family == "h2" ? TailInitialData::h2(lin_exp)
                                 : lin_family == "cubic"
                                     ? TailInitialData::cubic()
                                     : throw ConfigError(fmt::format("unknown family '{}'", lin_family));
            PrefactorOptions opt;
            opt.t_min = lin_t0;
            std::function<double(double)> rule = [](double t) { return 0.5 * std::sqrt(t); };
            if (lin_family == "cubic") rule = [](double) { return 1.0; };
            if (lin_rho > 0.0) {
                opt.regime = Regime::Ballistic;
                opt.rho = lin_rho;
                rule = [r = lin_rho](double t) { return r * t + 0.5 * std::sqrt(t); };
            }
            const auto e = estimate_prefactor(w0, log_grid(lin_t0, lin_t1, lin_per), rule, opt);
            std::unique_ptr<std::ofstream> h;
            write_ratio_csv(open_out(lin_out, h), e, [&](double t, double y) {
                return predict_asymptotic(e.constants, w0.family(), w0.exponent(),
                                          LinearSolutionQuery{t, y, opt.regime, opt.rho}, lin_t0);
            });
            std::cerr << fmt::format("varpi = {:.10g}  Lambda = {:.10g}  max drift = {:.3g}{}\n", e.constants.varpi,
                                     e.constants.lambda_big, e.max_drift, e.warning.empty() ? "" : "  " + e.warning);
            return 0;
        }
        if (simulate->parsed()) {
            const auto c = sim_keys.build(ScenarioId::CriticalTail);
            const auto sp = pair_for(c, sim_family);
            RdSolver s(c.nonlinearity(), data_for(c, sim_family), frame_for(sim_frame, sp), grid_for(c), solver_for(c));
            if (!sim_from.empty()) {
                std::ifstream in(sim_from);
                if (!in) throw ConfigError(fmt::format("cannot open '{}'", sim_from));
                s.set_state(read_checkpoint(in));
            }
            const auto& st = s.run_until(c.t_end);
            std::unique_ptr<std::ofstream> h;
            write_checkpoint(open_out(sim_out, h), st);
            if (auto X = level_set(st, c.m)) std::cerr << fmt::format("t = {:g}  X_m = {:.10g}\n", st.t, *X);
            return 0;
        }
        if (trackc->parsed()) {
            const auto c = track_keys.build(ScenarioId::CriticalTail);
            const auto sp = pair_for(c, tr_family);
            RdSolver s(c.nonlinearity(), data_for(c, tr_family), frame_for(tr_frame, sp), grid_for(c), solver_for(c));
            FrontTrace trace;
            trace.m = c.m;
            trace.dx = c.dx;
            trace.run_id = tr_family;
            s.run_until(
                c.t_end,
                [&](const FieldSnapshot& st) {
                    if (auto X = level_set(st, c.m))
                        if (trace.t.empty() || st.t > trace.t.back()) trace.add(st.t, *X);
                },
                log_grid(std::min(10.0, c.t_end / 10.0), c.t_end, tr_per));
            std::unique_ptr<std::ofstream> h;
            write_trace_csv(open_out(tr_out, h), trace, sp.c);
            return 0;
        }
        if (fit->parsed()) {
            std::ifstream in(fit_in);
            if (!in) throw ConfigError(fmt::format("cannot open '{}'", fit_in));
            const auto trace = read_trace_csv(in);
            FitModel model;
            model.speed = fit_c ? FitTerm::fixed(*fit_c) : FitTerm::free();
            model.log_t = fit_a ? FitTerm::fixed(*fit_a) : FitTerm::free();
            if (fit_loglog) model.loglog_t = FitTerm::free();
            const auto res = fit_shift(trace, model, {fit_lo, fit_hi});
            std::unique_ptr<std::ofstream> h;
            write_fit_report(open_out(fit_out, h), res);
            return 0;
        }
        if (barrier->parsed()) {
            BarrierSetup s;
            s.kind = barrier_kind_from_string(bar_kind);
            s.exponent = bar_exp;
            s.lambda = bar_lambda;
            s.A = bar_A;
            SamplingPlan plan = bar_coarse ? SamplingPlan::coarse() : SamplingPlan{};
            plan.t_hi = bar_thi;
            Certificate cert;
            auto p = BarrierParams::defaults(s.kind, bar_exp);
            if (bar_T > 0.0) {
                p.T = bar_T;
                cert = certify(BarrierSpec(s, p), plan);
            } else {
                TuneOptions opt;
                opt.full = plan;
                opt.screen.t_hi = bar_thi;
                cert = autotune_T(s, p, opt).certificate;
            }
            std::unique_ptr<std::ofstream> h;
            write_certificate(open_out(bar_out, h), cert);
            if (!bar_csv.empty()) {
                std::ofstream os(bar_csv);
                write_certificate_csv(os, cert);
            }
            return cert.sign_ok() ? 0 : 2;
        }
        if (scenario->parsed()) {
            std::vector<ScenarioConfig> cfgs;
            if (sc_all) {
                for (auto id : all_scenarios()) {
                    auto c = ScenarioConfig::defaults(id);
                    if (!sc_keys.values["outdir"].empty()) c.outdir = sc_keys.values["outdir"];
                    cfgs.push_back(c);
                }
            } else {
                if (!sc_keys.config_path.empty() || !sc_keys.values["scenario"].empty() || sc_ids.empty())
                    cfgs.push_back(sc_keys.build(ScenarioId::CriticalTail));
                for (const auto& id : sc_ids) {
                    KeyFlags k = sc_keys;
                    k.config_path.clear();
                    k.values["scenario"] = id;
                    cfgs.push_back(k.build(ScenarioId::CriticalTail));
                }
            }
            const auto records = run_scenarios(cfgs, sc_threads);
            const auto outdir = cfgs.front().outdir;
            const auto paths = emit_report(records, outdir);
            write_summary(std::cout, records);
            std::cout << "wrote " << paths[0] << " and " << paths[1] << "\n";
            return exit_code(records);
        }
        if (report->parsed()) {
            std::ifstream in(rep_in);
            if (!in) throw ConfigError(fmt::format("cannot open '{}'", rep_in));
            const auto records = read_records(in);
            write_summary(std::cout, records);
            return exit_code(records);
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 4;
    } catch (const DomainError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
