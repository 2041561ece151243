#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "glmb/glmb_filter.hpp"

namespace glmb {

struct TruthTrajectory {
    Label label;
    int birth_step = 1;
    int death_step = 0;          // last alive step, inclusive
    std::vector<Vec> states;     // one per alive step
    std::vector<int> modes;      // active model per alive step, zero based

    bool alive_at(int step) const {
        return step >= birth_step && step <= death_step;
    }
    const Vec& state_at(int step) const { return states[step - birth_step]; }
    int mode_at(int step) const { return modes[step - birth_step]; }
};

/// ScanSet plus the simulation-only measurement origin (trajectory index,
/// -1 for clutter). The filter consumes only the embedded ScanSet.
struct SimulatedScan {
    ScanSet scan;
    std::vector<int> truth_index;
};

struct BirthSpec {
    int step = 1;
    int site = 0;                   // birth-site index, zero based
    Vec initial_state;              // empty: sample from the site density
    std::vector<int> mode_schedule; // per alive step; empty: sample the chain
    int death_step = 0;             // 0: survive to the end
};

struct ScenarioScript {
    int steps = 100;
    std::vector<BirthSpec> births;
    std::uint64_t rng_seed = 0;
    /// Scales the motion-model Q when sampling truth process noise. The
    /// default scripts use a small value so trajectories stay inside the
    /// observation region for the full scenario; the filter always sees the
    /// unscaled model.
    double process_noise_scale = 1.0;
};

std::vector<TruthTrajectory> simulate_truth(const JmsModel& model,
                                            const ScenarioScript& script);

std::vector<SimulatedScan> simulate_scans(const std::vector<TruthTrajectory>& truths,
                                          const JmsModel& model,
                                          std::uint64_t seed);

/// Three targets born at steps 1/10/20 from sites 1-3, each with one right
/// and one left turn segment, all surviving to the final step.
ScenarioScript default_linear_script(std::uint64_t seed);

/// Nonlinear counterpart: same birth staging, scripted constant-velocity and
/// turning segments with nonzero initial turn rates.
ScenarioScript default_nonlinear_script(std::uint64_t seed);

/// Stress-test generator: every site births with its existence probability
/// each step; lifetimes follow the survival probability.
ScenarioScript random_birth_script(const JmsModel& model, int steps,
                                   std::uint64_t seed);

/// Sample from N(0, cov) for PSD (possibly singular) cov.
Vec sample_noise(const Mat& cov, std::mt19937_64& rng);

}  // namespace glmb
