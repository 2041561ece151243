#pragma once

#include <string>
#include <vector>

#include "glmb/gaussian.hpp"

namespace glmb {

/// Coordinated-turn transition matrix F2(omega) on [x, vx, y, vy]; returns
/// the constant-velocity limit F1 when |omega*T| < 1e-9.
Mat ct_matrix(double omega, double T);

/// Coordinated turn with unknown rate on [x, vx, y, vy, omega]: the
/// kinematic block follows F2(omega), the rate itself is a random walk.
Vec ct_unknown_rate(const Vec& state, double T);

/// One motion model of the jump Markov system. `kind` doubles as the
/// serialization tag; nonlinear kinds rebuild their state map from params.
struct MotionModel {
    std::string kind;  // "linear" | "ct_unknown_rate"
    Mat F;             // linear kinds only
    Mat Q;
    int state_dim = 0;

    bool linear() const { return kind == "linear"; }
    Vec propagate_mean(const Vec& x, double T) const;
    StateMap state_map(double T) const;
};

/// Row-stochastic mode switching matrix; probs(from, to).
struct SwitchingMatrix {
    Mat probs;

    int size() const { return static_cast<int>(probs.rows()); }
    double prob(int to, int from) const { return probs(from, to); }
    void validate() const;
};

struct SensorModel {
    std::string kind;  // "linear" | "bearing_range"
    Mat H;             // linear kind only
    Mat R;
    double detection_prob = 0.97;
    double clutter_rate = 60.0;
    Mat region;        // measurement_dim x 2 [lo, hi] bounds
    int measurement_dim = 0;

    bool linear() const { return kind == "linear"; }
    StateMap measurement_map() const;
    /// Indices of angular measurement components (bearing).
    std::vector<int> angle_dims() const;
    double region_volume() const;
    bool in_region(const Vec& z) const;
    /// log kappa(z): uniform Poisson clutter, clutter_rate / volume, with a
    /// floor so zero-clutter configs stay finite in log domain.
    double log_clutter_density() const;
};

struct BirthSite {
    double existence_prob = 0.0;
    Vec mean;
    Mat cov;
    Vec mode_prior;  // over motion models, sums to 1
};

struct BirthModel {
    std::vector<BirthSite> sites;
};

struct JmsModel {
    std::vector<MotionModel> models;
    SwitchingMatrix switching;
    SensorModel sensor;
    BirthModel birth;
    double survival_prob = 0.99;
    double sampling_interval = 5.0;

    int num_models() const { return static_cast<int>(models.size()); }
    int state_dim() const { return models.empty() ? 0 : models[0].state_dim; }
    UnscentedParams ut_params() const {
        return UnscentedParams::defaults_for(state_dim());
    }
    void validate() const;
};

/// f(zeta, r | zeta', r') = phi(zeta | zeta', r) * theta(r | r'), linear
/// domain. Model indices are zero based.
double joint_transition_density(const Vec& zeta_prev, int r_prev, const Vec& zeta,
                                int r, const JmsModel& model);

/// Three-model (CV, right turn, left turn) planar scenario with position
/// sensing.
JmsModel linear_scenario();

/// Two-model (CV, coordinated turn with unknown rate) scenario with a
/// bearing-range sensor at the origin.
JmsModel nonlinear_scenario();

/// Turn-rate process noise std used by nonlinear_scenario (rad/s per step
/// scaled by T); overridable through scenario config.
inline constexpr double default_turn_noise_std = M_PI / 1800.0;

}  // namespace glmb
