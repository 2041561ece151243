#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "glmb/jms_model.hpp"

namespace glmb {

/// Track identity: (birth time, birth index), ordered lexicographically.
struct Label {
    int birth_time = 0;
    int birth_index = 0;

    auto operator<=>(const Label&) const = default;
};

/// Joint density over (kinematic state, motion model) for one track:
/// a Gaussian mixture per mode. Normalized tracks have total mass 1 across
/// all modes.
struct ModeMixture {
    std::vector<Mixture> per_mode;

    int num_modes() const { return static_cast<int>(per_mode.size()); }
    double log_mass() const;
    double mode_log_mass(int r) const { return per_mode[r].log_mass(); }
    /// Shift all weights so log_mass() == 0.
    void normalize();
    /// Mode marginal probabilities (linear domain, normalized).
    Vec mode_probabilities() const;
    /// Moment-matched mean/cov over the full mode-summed mixture.
    void moments(Vec& mean, Mat& cov) const;
    /// Mean of the mode-conditioned mixture (empty mode yields a zero vector).
    Vec mode_conditioned_mean(int r) const;
};

using TrackDensityPtr = std::shared_ptr<const ModeMixture>;

struct GlmbHypothesis {
    std::vector<Label> labels;            // sorted ascending
    double log_weight = 0.0;
    std::vector<TrackDensityPtr> tracks;  // parallel to labels
    std::uint64_t assoc_history = 0;      // hash chain identifying xi

    int cardinality() const { return static_cast<int>(labels.size()); }
    const ModeMixture& track(int i) const { return *tracks[i]; }
};

struct GlmbDensity {
    std::vector<GlmbHypothesis> hypotheses;
    int time_index = 0;

    /// Single empty hypothesis with weight 1.
    static GlmbDensity initial();
    void normalize();
};

/// Measurement-only scan; the filter never sees simulation truth.
struct ScanSet {
    int time = 0;
    std::vector<Vec> measurements;
};

struct TruncationPolicy {
    int max_hypotheses = 1000;
    double min_log_weight = -15.0;  // relative to the heaviest hypothesis
    double prune_thresh = 1e-5;
    double merge_thresh = 4.0;      // squared Mahalanobis
    int max_components = 10;        // per track per mode
    bool gate = false;
    double gate_threshold = 36.0;   // squared Mahalanobis (6 sigma)

    /// No pruning, merging, gating, or hypothesis caps: exact recursion for
    /// oracle comparisons.
    static TruncationPolicy exact();
};

struct TargetEstimate {
    Label label;
    int mode = 0;        // argmax of the mode marginal
    Vec mean;            // moment-matched over the mode-summed mixture
    Mat cov;
    Vec mode_probs;
    std::vector<Vec> mode_means;
};

struct MultiTargetEstimate {
    std::vector<TargetEstimate> targets;
    int cardinality = 0;
    std::uint64_t source_hypothesis = 0;
};

struct StepDiagnostics {
    int num_hypotheses = 0;
    double eff_num_hypotheses = 0.0;  // exp(entropy of hypothesis weights)
    int total_components = 0;
    int ignored_measurements = 0;     // outside the observation region
};

/// JMS-GLMB prediction to time k: per-parent enumeration of survivor subsets
/// and birth-site subsets with exact closed-form weights (constant survival
/// probability, independent Bernoulli birth sites). When a policy is given,
/// children below min_log_weight relative to the best child are skipped and
/// per-track mixtures are pruned/merged; with policy == nullptr the
/// enumeration is exact.
GlmbDensity predict(const GlmbDensity& prior, const JmsModel& model, int k,
                    const TruncationPolicy* policy = nullptr);

/// Measurement update: per-hypothesis ranked assignment over the
/// tracks x (measurements + miss) log-cost matrix, K_h = ceil(max_hypotheses
/// * parent weight) children per parent, global renormalization and
/// per-track pruning/merging. Measurements outside the observation region
/// are ignored (counted in ignored_measurements when non-null).
GlmbDensity update(const GlmbDensity& pred, const ScanSet& scan,
                   const JmsModel& model, const TruncationPolicy& policy,
                   int* ignored_measurements = nullptr);

/// Keep at most max_hypotheses heaviest hypotheses, drop those below
/// min_log_weight relative to the maximum, renormalize. Ties broken by
/// (labels, assoc_history).
GlmbDensity truncate(const GlmbDensity& density, const TruncationPolicy& policy);

/// rho(n) = sum of weights of hypotheses with n labels.
std::vector<double> cardinality_distribution(const GlmbDensity& density);

/// MAP cardinality (smallest n on ties), then the heaviest hypothesis of
/// that cardinality; per-track mode argmax and moment-matched states.
MultiTargetEstimate extract(const GlmbDensity& density);

struct FilterStepResult {
    GlmbDensity posterior;
    MultiTargetEstimate estimate;
    StepDiagnostics diagnostics;
};

/// predict -> truncate -> update -> truncate -> extract.
FilterStepResult filter_step(const GlmbDensity& prior, const ScanSet& scan,
                             const JmsModel& model, const TruncationPolicy& policy,
                             int k);

/// Debug/interchange snapshot: hypotheses, labels, log-weights, per-mode
/// mixture parameters as a JSON document.
std::string density_snapshot_json(const GlmbDensity& density);

}  // namespace glmb
