#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vhmmt/harness/simulation.hpp"

namespace vhmmt::harness {

struct InvariantResult {
    std::string name;
    bool ok = true;
    std::string detail;
};

/// Log-level invariants: monotone timestamps, causality of live frames,
/// preview freshness and live-frame lag against the configured delay.
std::vector<InvariantResult> check_invariants(const RunLog& log);

/// Per-subtask times, lateral RMSE and eccentricity over the tracked sweeps,
/// forces, delay statistics and invariants. A pure function of the log, so
/// equal logs give byte-identical dumps. Throws ConfigError for an empty log.
nlohmann::json make_report(const RunLog& log);

/// section,key,value rows, one per leaf of the report.
std::string report_csv(const nlohmann::json& report);

/// Writes report.json and report.csv.
void write_report(const nlohmann::json& report, const std::filesystem::path& dir);

/// True when every invariant in the report holds.
bool report_ok(const nlohmann::json& report);

} // namespace vhmmt::harness
