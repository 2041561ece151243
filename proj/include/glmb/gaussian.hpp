#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "glmb/common.hpp"

namespace glmb {

/// One weighted Gaussian. The weight lives in log domain; a mixture's total
/// mass is log_sum_exp over its components.
struct GaussianComponent {
    double log_weight = 0.0;
    Vec mean;
    Mat cov;

    int dim() const { return static_cast<int>(mean.size()); }
};

struct Mixture {
    std::vector<GaussianComponent> components;

    bool empty() const { return components.empty(); }
    /// log of the total mass.
    double log_mass() const;
    /// Rescale all weights so log_mass() == target.
    void set_log_mass(double target);
};

struct UnscentedParams {
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 0.0;

    /// alpha=1, beta=2, kappa=3-n.
    static UnscentedParams defaults_for(int n) { return {1.0, 2.0, 3.0 - n}; }
};

struct SigmaPoints {
    std::vector<Vec> points;        // 2n+1 points, first is the mean
    std::vector<double> mean_weights;
    std::vector<double> cov_weights;
};

using StateMap = std::function<Vec(const Vec&)>;

/// Symmetrize and, if a Cholesky factorization fails, add diagonal jitter
/// 1e-12*trace/n once. Throws NumericalError if the jittered matrix still
/// fails.
void ensure_spd(Mat& a);

/// log N(y; 0, S). Throws NumericalError if S is not SPD within tolerance.
double log_gaussian(const Vec& y, const Mat& S);

GaussianComponent kalman_predict(const GaussianComponent& comp, const Mat& F,
                                 const Mat& Q);

/// Measurement-independent part of a Kalman/UKF update: predicted
/// measurement, gain, posterior covariance, and the innovation-Gaussian
/// normalizer. One cache serves every measurement against the component.
struct UpdateCache {
    Vec prior_mean;
    Vec z_pred;
    Mat gain;
    Mat post_cov;                  // conditioned, z-independent
    Eigen::LLT<Mat> innov_llt;     // factor of S
    double log_norm = 0.0;         // -0.5*(m*log(2pi) + logdet S)
    std::vector<int> angle_dims;   // measurement components wrapped to (-pi, pi]

    /// Innovation z - z_pred with angular components wrapped.
    Vec innovation(const Vec& z) const;
    /// log N(z; z_pred, S)
    double log_likelihood(const Vec& z) const;
    /// Posterior mean for measurement z.
    Vec posterior_mean(const Vec& z) const;
};

UpdateCache kalman_update_cache(const GaussianComponent& comp, const Mat& H,
                                const Mat& R);

std::pair<GaussianComponent, double> kalman_update(const GaussianComponent& comp,
                                                   const Vec& z, const Mat& H,
                                                   const Mat& R);

SigmaPoints ut_points(const GaussianComponent& comp, const UnscentedParams& params);

GaussianComponent ukf_predict(const GaussianComponent& comp, const StateMap& f,
                              const Mat& Q, const UnscentedParams& params);

UpdateCache ukf_update_cache(const GaussianComponent& comp, const StateMap& h,
                             const Mat& R, const UnscentedParams& params,
                             const std::vector<int>& angle_dims = {});

std::pair<GaussianComponent, double> ukf_update(const GaussianComponent& comp,
                                                const Vec& z, const StateMap& h,
                                                const Mat& R,
                                                const UnscentedParams& params,
                                                const std::vector<int>& angle_dims = {});

/// Drop components below prune_thresh (normalized weight), greedily merge
/// components within merge_thresh squared-Mahalanobis distance of the
/// dominant remaining one (moment matching), keep at most max_comp, and
/// renormalize to the input total mass.
Mixture prune_merge(const Mixture& mix, double prune_thresh, double merge_thresh,
                    int max_comp);

}  // namespace glmb
