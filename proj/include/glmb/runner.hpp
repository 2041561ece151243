#pragma once

#include "glmb/config.hpp"

namespace glmb {

struct SingleRunResult {
    std::vector<OspaResult> ospa;          // per step
    std::vector<int> card_truth;
    std::vector<int> card_est;
    Mat mode_trace;                        // steps x R, truth target 1 (NaN = absent)
    std::vector<int> truth_modes;          // truth target 1 mode, -1 when dead
    std::vector<int> mode_match;           // 1 match / 0 mismatch / -1 dead
    std::vector<MultiTargetEstimate> estimates;
    int ignored_measurements = 0;
};

struct McSummary {
    int steps = 0;
    int runs = 0;
    std::vector<double> mean_ospa_total, mean_ospa_loc, mean_ospa_card;
    std::vector<double> mean_card_truth, mean_card_est;
    Mat mean_mode_probs;                   // steps x R (absent counted as 0)
    std::vector<double> mode_match_rate;   // per step, over runs with target alive
    std::vector<int> truth_modes;          // scripted target-1 modes (run 0)
    double elapsed_seconds = 0.0;
    long total_ignored = 0;
};

SingleRunResult execute_single_run(const RunConfig& cfg, int run_index);

/// Runs cfg.runs Monte Carlo repetitions (worker pool of cfg.threads), writes
/// per-run CSVs plus summary.csv under cfg.output_dir (skipped when empty),
/// and returns the deterministic aggregate.
McSummary run_monte_carlo(const RunConfig& cfg);

/// Filter externally recorded scans; writes estimates.csv (and modes.csv)
/// under output_dir. Returns the count of ignored out-of-region measurements.
int replay_scans(const std::vector<ScanSet>& scans, const JmsModel& model,
                 const TruncationPolicy& policy, const std::string& output_dir,
                 std::vector<MultiTargetEstimate>* estimates_out = nullptr);

}  // namespace glmb
