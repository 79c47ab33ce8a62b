#pragma once

#include "kppfront/kpp_core.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace kpp {

/// Runnable checks, one per asymptotic law.
enum class ScenarioId {
    CriticalTail,       ///< thm1-k>-3: k/(2 lambda*) ln t delay
    CriticalTailLogLog, ///< thm1-k=-3: extra ln ln t term
    FlatTail,           ///< thm2-nu: speed c(lambda), nu/lambda ln t
    SteepTail,          ///< thm3-k<-3: Bramson delay and convergence to a wave
    SingleWave,         ///< thm4-single-wave: a1 = a2, k >= -3
    FlatSingleWave,     ///< thm5-nu-single-wave: a1 = a2, flat tail, sigma scaling
    LinearAsymptotics,
    BarrierCertificates,
};

const char* to_string(ScenarioId id);
/// Accepts the ids above with ASCII or Unicode minus signs.
ScenarioId scenario_from_string(const std::string& s);
std::vector<ScenarioId> all_scenarios();

/// Flat key = value configuration. Keys: scenario, f, k, nu, lambda, a1, a2, A, dx, dt,
/// t_end, m, window_lo, window_hi, outdir, seed. Lines starting with # are comments.
struct ScenarioConfig {
    ScenarioId scenario = ScenarioId::CriticalTail;
    std::string f = "fisher";  ///< "fisher" or "fisher:<rate>"
    double k = 0.0;
    double nu = 1.0;
    double lambda = 0.5;
    double a1 = 1.0, a2 = 1.0;
    double A = 10.0;
    double dx = 0.1;
    double dt = 0.5;
    double t_end = 1e5;
    double m = 0.5;
    double window_lo = 0.0;  ///< 0: t_end / 10
    double window_hi = 0.0;  ///< 0: t_end
    std::string outdir = "kppfront-out";
    std::uint64_t seed = 0;

    /// Defaults tuned per scenario (horizon, window, junction).
    static ScenarioConfig defaults(ScenarioId id);

    KppNonlinearity nonlinearity() const;
    /// Hypotheses of the scenario; throws ConfigError.
    void validate() const;
    /// Sets one key from text; throws ConfigError for unknown keys or bad numbers.
    void set(const std::string& key, const std::string& value);
    std::map<std::string, std::string> to_map() const;
};

/// Reads `scenario` first (to pick the defaults), then applies every other key.
ScenarioConfig parse_config(std::istream& is);
ScenarioConfig load_config(const std::string& path);
void write_config(std::ostream& os, const ScenarioConfig& c);

/// One acceptance rule: |value - predicted| <= tolerance, or value <= tolerance for bounds.
/// Info entries carry a measured value and never fail.
struct Check {
    enum Kind { Near, AtMost, Flag, Info };
    std::string name;
    Kind kind = Near;
    double value = 0.0;
    double predicted = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;

    static Check near(std::string name, double value, double predicted, double tol, std::string note = {});
    static Check at_most(std::string name, double value, double bound, std::string note = {});
    static Check flag(std::string name, bool ok, std::string note = {});
    static Check info(std::string name, double value, std::string note = {});
};

enum class RunStatus { Pass, AcceptanceFailure, NumericalFailure, ConfigFailure };
const char* to_string(RunStatus s);
RunStatus run_status_from_string(const std::string& s);

struct ResultRecord {
    std::string scenario;
    std::map<std::string, std::string> config;
    std::vector<Check> checks;
    RunStatus status = RunStatus::Pass;
    std::string message;
    double runtime_s = 0.0;
    std::vector<std::string> artifacts;

    bool passed() const { return status == RunStatus::Pass; }
    const Check* find(const std::string& name) const;
};

/// build, integrate, track, fit/compare, persist. Errors from the modules become a record
/// with NumericalFailure or ConfigFailure; partial checks and artifacts are kept.
ResultRecord run_scenario(const ScenarioConfig& cfg);

/// Worker pool over scenarios; `threads` = 0 uses the hardware concurrency.
std::vector<ResultRecord> run_scenarios(const std::vector<ScenarioConfig>& cfgs, unsigned threads = 0);

/// 0 all pass, 2 acceptance failure, 3 numerical failure, 4 configuration error (worst wins).
int exit_code(const std::vector<ResultRecord>& records);

/// Directory name for a scenario id (no shell-special characters).
std::string scenario_slug(ScenarioId id);

}  // namespace kpp
