#pragma once

#include "kppfront/scenarios.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace kpp {

/// JSON with a "format": "kppfront-results v1" tag; read_records accepts what write_records writes.
void write_records(std::ostream& os, const std::vector<ResultRecord>& records);
std::vector<ResultRecord> read_records(std::istream& is);

/// Plain-text summary: one block per record with every check and its verdict.
void write_summary(std::ostream& os, const std::vector<ResultRecord>& records);

/// Writes <dir>/results.json and <dir>/summary.txt; returns the two paths.
std::vector<std::string> emit_report(const std::vector<ResultRecord>& records, const std::string& dir);

}  // namespace kpp
