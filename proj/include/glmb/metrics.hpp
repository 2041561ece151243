#pragma once

#include "glmb/glmb_filter.hpp"
#include "glmb/simulator.hpp"

namespace glmb {

struct OspaParams {
    double cutoff = 200.0;  // meters
    double order = 2.0;

    void validate() const {
        if (!(cutoff > 0.0)) throw ConfigError("OSPA cutoff must be positive");
        if (!(order >= 1.0)) throw ConfigError("OSPA order must be >= 1");
    }
};

struct OspaResult {
    double total = 0.0;
    double localization = 0.0;
    double cardinality = 0.0;
};

/// OSPA miss-distance between two finite sets of position vectors.
OspaResult ospa(const std::vector<Vec>& X, const std::vector<Vec>& Y,
                const OspaParams& params);

/// Position components (x, y) of a state vector.
Vec position_of(const Vec& state);

/// Per-step mode-marginal probabilities of the estimated track matched to
/// `truth` (smallest time-averaged position distance). Row k-1 covers step
/// k; steps where the matched track is absent are NaN-filled.
Mat mode_probability_trace(const std::vector<MultiTargetEstimate>& estimates,
                           const TruthTrajectory& truth, int num_modes);

}  // namespace glmb
