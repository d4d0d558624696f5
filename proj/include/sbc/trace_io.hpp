#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sbc/pipeline.hpp"

namespace sbc {

// Shortest decimal form that parses back to the same double; CSV and JSON
// both use it so archives are byte-stable across runs.
std::string format_double(double v);

nlohmann::json audit_to_json(const ScenarioResult& result);

// Writes trace.csv, pairs.csv, audit.json, scenario.json into dir.
void write_archive(const std::filesystem::path& dir, const ScenarioResult& result);

// Extremes recomputed from the stored CSV tables, plus the stored JSON
// documents, for re-auditing archives.
struct ArchiveSummary {
    nlohmann::json scenario;
    nlohmann::json audit;
    int steps = 0;
    int vehicles = 0;
    double max_tilt = 0.0;  // radians
    double max_tilt_time = 0.0;
    int max_tilt_vehicle = -1;
    double max_thrust_ratio = 0.0;
    double max_thrust_ratio_time = 0.0;
    int max_thrust_ratio_vehicle = -1;
    double min_h = std::numeric_limits<double>::infinity();
    double min_h_time = 0.0;
    int min_h_i = -1;
    int min_h_j = -1;
    bool has_nan_samples = false;  // singular flatness samples in the trace
};

ArchiveSummary read_archive(const std::filesystem::path& dir);

}  // namespace sbc
