#pragma once

#include <string>
#include <vector>

#include "bciflow/monitor.hpp"

namespace bciflow::cli {

/// Machine-readable report: {"summary":{counts},"violations":[...]} with
/// stable field ordering.
std::string report_json(const mon::ReplaySummary& summary);

/// Runs one subcommand (replay | gen | corpus | attack | defend | bench).
/// `args` excludes the program name. Exit codes: 0 success / no violations,
/// 2 violations found, 1 usage or runtime error.
int run(const std::vector<std::string>& args);

}  // namespace bciflow::cli
