#include "kppfront/report.hpp"

#include "kppfront/errors.hpp"

#include <fmt/format.h>
#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

namespace kpp {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "kppfront-results v1";

const char* kind_name(Check::Kind k) {
    switch (k) {
        case Check::Near: return "near";
        case Check::AtMost: return "at-most";
        case Check::Flag: return "flag";
        case Check::Info: return "info";
    }
    return "?";
}

Check::Kind kind_from(const std::string& s) {
    for (auto k : {Check::Near, Check::AtMost, Check::Flag, Check::Info})
        if (s == kind_name(k)) return k;
    throw ConfigError(fmt::format("unknown check kind '{}'", s));
}

// JSON has no inf/nan; store them as strings
json number(double x) {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

double number_from(const json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    throw ConfigError(fmt::format("bad number '{}'", s));
}

std::string verdict(const Check& c) {
    if (c.kind == Check::Info) return "info";
    return c.pass ? "PASS" : "FAIL";
}

}  // namespace

void write_records(std::ostream& os, const std::vector<ResultRecord>& records) {
    json out;
    out["format"] = kFormat;
    out["records"] = json::array();
    for (const auto& r : records) {
        json jr;
        jr["scenario"] = r.scenario;
        jr["config"] = r.config;
        jr["status"] = to_string(r.status);
        jr["message"] = r.message;
        jr["runtime_s"] = r.runtime_s;
        jr["artifacts"] = r.artifacts;
        jr["checks"] = json::array();
        for (const auto& c : r.checks)
            jr["checks"].push_back({{"name", c.name},
                                    {"kind", kind_name(c.kind)},
                                    {"value", number(c.value)},
                                    {"predicted", number(c.predicted)},
                                    {"tolerance", number(c.tolerance)},
                                    {"pass", c.pass},
                                    {"note", c.note}});
        out["records"].push_back(std::move(jr));
    }
    os << out.dump(2) << "\n";
}

std::vector<ResultRecord> read_records(std::istream& is) {
    json in;
    try {
        in = json::parse(is);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("results file is not valid JSON: {}", e.what()));
    }
    if (in.value("format", "") != kFormat) throw ConfigError("results file has no kppfront-results v1 tag");
    std::vector<ResultRecord> out;
    try {
        for (const auto& jr : in.at("records")) {
            ResultRecord r;
            r.scenario = jr.at("scenario").get<std::string>();
            r.config = jr.at("config").get<std::map<std::string, std::string>>();
            r.status = run_status_from_string(jr.at("status").get<std::string>());
            r.message = jr.value("message", "");
            r.runtime_s = jr.value("runtime_s", 0.0);
            r.artifacts = jr.value("artifacts", std::vector<std::string>{});
            for (const auto& jc : jr.at("checks")) {
                Check c;
                c.name = jc.at("name").get<std::string>();
                c.kind = kind_from(jc.at("kind").get<std::string>());
                c.value = number_from(jc.at("value"));
                c.predicted = number_from(jc.at("predicted"));
                c.tolerance = number_from(jc.at("tolerance"));
                c.pass = jc.at("pass").get<bool>();
                c.note = jc.value("note", "");
                r.checks.push_back(std::move(c));
            }
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("malformed results file: {}", e.what()));
    }
    return out;
}

void write_summary(std::ostream& os, const std::vector<ResultRecord>& records) {
    std::size_t passed = 0;
    for (const auto& r : records) {
        if (r.passed()) ++passed;
        os << fmt::format("{} [{}] {:.1f} s\n", r.scenario, to_string(r.status), r.runtime_s);
        if (!r.message.empty()) os << "  " << r.message << "\n";
        for (const auto& c : r.checks) {
            std::string rule;
            switch (c.kind) {
                case Check::Near: rule = fmt::format("{:.6g} vs {:.6g} +- {:.3g}", c.value, c.predicted, c.tolerance); break;
                case Check::AtMost: rule = fmt::format("{:.6g} <= {:.3g}", c.value, c.tolerance); break;
                case Check::Flag: rule = c.pass ? "ok" : "not ok"; break;
                case Check::Info: rule = fmt::format("{:.6g}", c.value); break;
            }
            os << fmt::format("  {:<4} {}: {}", verdict(c), c.name, rule);
            if (!c.note.empty()) os << "  (" << c.note << ")";
            os << "\n";
        }
    }
    os << fmt::format("{} of {} scenarios passed\n", passed, records.size());
}

std::vector<std::string> emit_report(const std::vector<ResultRecord>& records, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto json_path = (fs::path(dir) / "results.json").string();
    const auto text_path = (fs::path(dir) / "summary.txt").string();
    {
        std::ofstream os(json_path);
        if (!os) throw ConfigError(fmt::format("cannot write '{}'", json_path));
        write_records(os, records);
    }
    std::ofstream os(text_path);
    if (!os) throw ConfigError(fmt::format("cannot write '{}'", text_path));
    write_summary(os, records);
    return {json_path, text_path};
}

}  // namespace kpp
