#pragma once

#include <string>

#include "glmb/metrics.hpp"
#include "glmb/simulator.hpp"

namespace glmb {

struct EmitFlags {
    bool estimates = true;
    bool ospa = true;
    bool modes = true;
    bool density_snapshots = false;
};

struct RunConfig {
    std::string scenario_name = "linear";  // preset name or scenario file path
    JmsModel model;
    ScenarioScript script;
    int runs = 1;
    std::uint64_t seed = 0;
    TruncationPolicy policy;
    OspaParams ospa_params;
    std::string output_dir = "out";
    int threads = 1;
    EmitFlags emit;
    bool verbose = false;
};

// scenario files
std::string scenario_to_json_string(const JmsModel& model);
JmsModel scenario_from_json_string(const std::string& text);
void save_scenario(const JmsModel& model, const std::string& path);
JmsModel load_scenario(const std::string& path);

// scenario scripts
std::string script_to_json_string(const ScenarioScript& script);
ScenarioScript script_from_json_string(const std::string& text);

// run configuration; throws ConfigError naming the offending key
RunConfig run_config_from_json_string(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Resolve a preset name ("linear" | "nonlinear") or scenario file path to a
/// model plus its default script.
void resolve_scenario(const std::string& name, JmsModel& model,
                      ScenarioScript& script, std::uint64_t seed);

// scan logs: JSON array of {"k": step, "measurements": [[...], ...]}
std::string scans_to_json_string(const std::vector<ScanSet>& scans);
std::vector<ScanSet> scans_from_json_string(const std::string& text);
void save_scans(const std::vector<ScanSet>& scans, const std::string& path);
std::vector<ScanSet> load_scans(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace glmb
