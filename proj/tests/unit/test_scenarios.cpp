#include "kppfront/errors.hpp"
#include "kppfront/report.hpp"
#include "kppfront/scenarios.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

using namespace kpp;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ResultRecord record(const std::string& id, RunStatus st) {
    ResultRecord r;
    r.scenario = id;
    r.status = st;
    return r;
}
}  // namespace

TEST_CASE("scenario ids") {
    for (auto id : all_scenarios()) CHECK(scenario_from_string(to_string(id)) == id);
    CHECK(scenario_from_string("thm1-k>\xe2\x88\x92" "3") == ScenarioId::CriticalTail);
    CHECK(scenario_from_string("thm3-k<-3") == ScenarioId::SteepTail);
    CHECK_THROWS_AS(scenario_from_string("thm9"), ConfigError);
    for (auto id : all_scenarios())
        CHECK(scenario_slug(id).find_first_of("<>=|&;$ ") == std::string::npos);
}

TEST_CASE("config parsing") {
    std::istringstream in(R"(# a comment
k = 2
scenario = thm1-k>-3

a1 = 0.5
a2 = 1.5
seed = 7
)");
    const auto c = parse_config(in);
    CHECK(c.scenario == ScenarioId::CriticalTail);
    CHECK(c.k == 2.0);
    CHECK(c.a1 == 0.5);
    CHECK(c.seed == 7);
    CHECK_NOTHROW(c.validate());

    std::stringstream out;
    write_config(out, c);
    const auto back = parse_config(out);
    CHECK(back.to_map() == c.to_map());
}

TEST_CASE("config errors") {
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return parse_config(in);
    };
    CHECK_THROWS_AS(parse("k = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("scenario = thm2-nu\ncolour = red\n"), ConfigError);
    CHECK_THROWS_AS(parse("scenario = thm2-nu\nlambda = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse("scenario = thm2-nu\njust text\n"), ConfigError);
    CHECK_THROWS_AS(parse("scenario = thm2-nu\nseed = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/kppfront.cfg"), ConfigError);

    // hypotheses of each scenario
    auto c = ScenarioConfig::defaults(ScenarioId::CriticalTail);
    c.k = -5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ScenarioConfig::defaults(ScenarioId::SteepTail);
    c.k = -2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ScenarioConfig::defaults(ScenarioId::SingleWave);
    c.a2 = 2.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ScenarioConfig::defaults(ScenarioId::FlatTail);
    c.lambda = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ScenarioConfig::defaults(ScenarioId::FlatTail);
    c.f = "arrhenius";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.f = "fisher:4";
    c.lambda = 1.5;
    CHECK_NOTHROW(c.validate());

    const auto bad = run_scenario([] {
        auto x = ScenarioConfig::defaults(ScenarioId::CriticalTail);
        x.k = -5;
        x.outdir = (fs::temp_directory_path() / "kppfront-bad").string();
        return x;
    }());
    CHECK(bad.status == RunStatus::ConfigFailure);
    CHECK_FALSE(bad.message.empty());
}

TEST_CASE("checks") {
    CHECK(Check::near("a", 1.04, 1.0, 0.05).pass);
    CHECK_FALSE(Check::near("a", 1.06, 1.0, 0.05).pass);
    CHECK(Check::at_most("d", 0.01, 0.02).pass);
    CHECK_FALSE(Check::at_most("d", 0.03, 0.02).pass);
    CHECK(Check::info("s", 1e9).pass);
    CHECK_FALSE(Check::flag("f", false).pass);
}

TEST_CASE("exit codes, worst wins") {
    CHECK(exit_code({}) == 0);
    CHECK(exit_code({record("a", RunStatus::Pass)}) == 0);
    CHECK(exit_code({record("a", RunStatus::Pass), record("b", RunStatus::AcceptanceFailure)}) == 2);
    CHECK(exit_code({record("a", RunStatus::NumericalFailure), record("b", RunStatus::AcceptanceFailure)}) == 3);
    CHECK(exit_code({record("a", RunStatus::ConfigFailure), record("b", RunStatus::NumericalFailure)}) == 4);
    for (auto s : {RunStatus::Pass, RunStatus::AcceptanceFailure, RunStatus::NumericalFailure, RunStatus::ConfigFailure})
        CHECK(run_status_from_string(to_string(s)) == s);
}

TEST_CASE("report formatting round trips") {
    // a passing record with the usual mix of checks
    ResultRecord a = record("thm1-k>-3", RunStatus::Pass);
    a.config = ScenarioConfig::defaults(ScenarioId::CriticalTail).to_map();
    a.checks = {Check::near("log_t_coefficient", 0.957, 1.0, 0.05), Check::info("condition", 12.5, "note, with comma")};
    a.runtime_s = 1.25;
    a.artifacts = {"out/trace.csv", "out/fit.txt"};
    // non-finite values survive
    ResultRecord b = record("thm3-k<-3", RunStatus::AcceptanceFailure);
    b.checks = {Check::info("sigma", std::numeric_limits<double>::infinity()),
                Check::info("drift", std::nan("")), Check::at_most("distance", 0.5, 0.02)};
    b.message = "quote \" and newline\n";
    // a numerical failure with no checks
    ResultRecord c = record("barrier-certificates", RunStatus::NumericalFailure);
    c.message = "AccuracyError: quadrature";

    std::stringstream js;
    write_records(js, {a, b, c});
    CHECK(js.str().find("kppfront-results v1") != std::string::npos);
    const auto back = read_records(js);
    REQUIRE(back.size() == 3);
    CHECK(back[0].scenario == a.scenario);
    CHECK(back[0].config == a.config);
    CHECK(back[0].checks.size() == 2);
    CHECK(back[0].checks[0].value == 0.957);
    CHECK(back[0].checks[0].pass);
    CHECK(back[0].checks[1].note == "note, with comma");
    CHECK(back[0].artifacts == a.artifacts);
    CHECK(back[0].runtime_s == 1.25);
    CHECK(std::isinf(back[1].checks[0].value));
    CHECK(std::isnan(back[1].checks[1].value));
    CHECK_FALSE(back[1].checks[2].pass);
    CHECK(back[1].message == b.message);
    CHECK(back[2].status == RunStatus::NumericalFailure);

    // writing what was read gives the same bytes
    std::stringstream again;
    write_records(again, back);
    CHECK(again.str() == js.str());

    std::ostringstream sum;
    write_summary(sum, {a, b, c});
    CHECK(sum.str().find("1 of 3 scenarios passed") != std::string::npos);
    CHECK(sum.str().find("FAIL") != std::string::npos);

    std::istringstream junk("{\"format\": \"something else\"}");
    CHECK_THROWS_AS(read_records(junk), ConfigError);
}

TEST_CASE("emit_report writes both files") {
    const auto dir = fs::temp_directory_path() / "kppfront-report-test";
    fs::remove_all(dir);
    const auto paths = emit_report({record("x", RunStatus::Pass)}, dir.string());
    REQUIRE(paths.size() == 2);
    for (const auto& p : paths) CHECK(fs::exists(p));
}

TEST_CASE("identical configs give byte-identical CSVs") {
    auto cfg = ScenarioConfig::defaults(ScenarioId::CriticalTail);
    cfg.t_end = 300.0;
    const auto base = fs::temp_directory_path() / "kppfront-determinism";
    fs::remove_all(base);
    cfg.outdir = (base / "one").string();
    const auto r1 = run_scenario(cfg);
    cfg.outdir = (base / "two").string();
    const auto r2 = run_scenario(cfg);
    REQUIRE(r1.status != RunStatus::NumericalFailure);
    REQUIRE(r1.artifacts.size() == r2.artifacts.size());
    int csvs = 0;
    for (std::size_t i = 0; i < r1.artifacts.size(); ++i) {
        const fs::path p1 = r1.artifacts[i], p2 = r2.artifacts[i];
        CHECK(p1.filename() == p2.filename());
        if (p1.extension() != ".csv") continue;
        ++csvs;
        CHECK(slurp(p1) == slurp(p2));
    }
    CHECK(csvs > 0);
}
