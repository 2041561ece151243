#include "glmb/gaussian.hpp"

#include <numeric>

namespace glmb {

double Mixture::log_mass() const {
    std::vector<double> lw;
    lw.reserve(components.size());
    for (const auto& c : components) lw.push_back(c.log_weight);
    return log_sum_exp(lw);
}

void Mixture::set_log_mass(double target) {
    double current = log_mass();
    if (current == neg_inf) return;
    double shift = target - current;
    for (auto& c : components) c.log_weight += shift;
}

void ensure_spd(Mat& a) {
    a = 0.5 * (a + a.transpose()).eval();
    Eigen::LLT<Mat> llt(a);
    if (llt.info() == Eigen::Success) return;
    double jitter = 1e-12 * a.trace() / static_cast<double>(a.rows());
    if (!(jitter > 0.0)) jitter = 1e-12;
    a += jitter * Mat::Identity(a.rows(), a.cols());
    llt.compute(a);
    if (llt.info() != Eigen::Success)
        throw NumericalError("covariance not positive definite after jitter");
}

namespace {

Eigen::LLT<Mat> checked_llt(const Mat& s, const char* what) {
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) {
        Mat sj = s;
        double jitter = 1e-12 * sj.trace() / static_cast<double>(sj.rows());
        if (!(jitter > 0.0)) jitter = 1e-12;
        sj += jitter * Mat::Identity(sj.rows(), sj.cols());
        llt.compute(sj);
        if (llt.info() != Eigen::Success) throw NumericalError(what);
    }
    return llt;
}

double log_det_from_llt(const Eigen::LLT<Mat>& llt) {
    double ld = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) ld += 2.0 * std::log(l(i, i));
    return ld;
}

}  // namespace

double log_gaussian(const Vec& y, const Mat& S) {
    auto llt = checked_llt(S, "singular innovation covariance");
    double maha = y.dot(llt.solve(y));
    return -0.5 * (y.size() * std::log(2.0 * M_PI) + log_det_from_llt(llt) + maha);
}

GaussianComponent kalman_predict(const GaussianComponent& comp, const Mat& F,
                                 const Mat& Q) {
    if (F.cols() != comp.mean.size() || Q.rows() != F.rows() || Q.cols() != F.rows())
        throw ConfigError("kalman_predict: dimension mismatch");
    GaussianComponent out;
    out.log_weight = comp.log_weight;
    out.mean = F * comp.mean;
    out.cov = F * comp.cov * F.transpose() + Q;
    ensure_spd(out.cov);
    return out;
}

Vec UpdateCache::innovation(const Vec& z) const {
    Vec y = z - z_pred;
    for (int d : angle_dims) y(d) = wrap_angle(y(d));
    return y;
}

double UpdateCache::log_likelihood(const Vec& z) const {
    Vec y = innovation(z);
    return log_norm - 0.5 * y.dot(innov_llt.solve(y));
}

Vec UpdateCache::posterior_mean(const Vec& z) const {
    return prior_mean + gain * innovation(z);
}

UpdateCache kalman_update_cache(const GaussianComponent& comp, const Mat& H,
                                const Mat& R) {
    if (H.cols() != comp.mean.size() || R.rows() != H.rows() || R.cols() != H.rows())
        throw ConfigError("kalman_update: dimension mismatch");
    UpdateCache cache;
    cache.prior_mean = comp.mean;
    cache.z_pred = H * comp.mean;
    Mat S = H * comp.cov * H.transpose() + R;
    S = 0.5 * (S + S.transpose()).eval();
    cache.innov_llt = checked_llt(S, "kalman_update: singular innovation covariance");
    cache.log_norm = -0.5 * (H.rows() * std::log(2.0 * M_PI) +
                             log_det_from_llt(cache.innov_llt));
    Mat PH = comp.cov * H.transpose();
    cache.gain = cache.innov_llt.solve(PH.transpose()).transpose();
    // Joseph form keeps the conditioned covariance symmetric PSD
    Mat I_KH = Mat::Identity(comp.dim(), comp.dim()) - cache.gain * H;
    cache.post_cov = I_KH * comp.cov * I_KH.transpose() +
                     cache.gain * R * cache.gain.transpose();
    ensure_spd(cache.post_cov);
    return cache;
}

std::pair<GaussianComponent, double> kalman_update(const GaussianComponent& comp,
                                                   const Vec& z, const Mat& H,
                                                   const Mat& R) {
    auto cache = kalman_update_cache(comp, H, R);
    GaussianComponent out;
    out.log_weight = comp.log_weight;
    out.mean = cache.posterior_mean(z);
    out.cov = cache.post_cov;
    return {std::move(out), cache.log_likelihood(z)};
}

SigmaPoints ut_points(const GaussianComponent& comp, const UnscentedParams& params) {
    const int n = comp.dim();
    const double lambda = params.alpha * params.alpha * (n + params.kappa) - n;
    if (!(n + lambda > 0.0))
        throw ConfigError("ut_points: nonpositive n + lambda");
    Mat scaled = (n + lambda) * comp.cov;
    Eigen::LLT<Mat> llt(scaled);
    if (llt.info() != Eigen::Success) {
        Mat fixed = comp.cov;
        ensure_spd(fixed);
        llt.compute(((n + lambda) * fixed).eval());
        if (llt.info() != Eigen::Success)
            throw NumericalError("ut_points: covariance not SPD");
    }
    Mat L = llt.matrixL();

    SigmaPoints sp;
    sp.points.reserve(2 * n + 1);
    sp.points.push_back(comp.mean);
    for (int i = 0; i < n; ++i) sp.points.push_back(comp.mean + L.col(i));
    for (int i = 0; i < n; ++i) sp.points.push_back(comp.mean - L.col(i));

    sp.mean_weights.assign(2 * n + 1, 1.0 / (2.0 * (n + lambda)));
    sp.cov_weights = sp.mean_weights;
    sp.mean_weights[0] = lambda / (n + lambda);
    sp.cov_weights[0] = lambda / (n + lambda) +
                        (1.0 - params.alpha * params.alpha + params.beta);
    return sp;
}

GaussianComponent ukf_predict(const GaussianComponent& comp, const StateMap& f,
                              const Mat& Q, const UnscentedParams& params) {
    auto sp = ut_points(comp, params);
    std::vector<Vec> prop;
    prop.reserve(sp.points.size());
    for (const auto& p : sp.points) prop.push_back(f(p));

    Vec mean = Vec::Zero(prop[0].size());
    for (std::size_t i = 0; i < prop.size(); ++i) mean += sp.mean_weights[i] * prop[i];
    Mat cov = Q;
    for (std::size_t i = 0; i < prop.size(); ++i) {
        Vec d = prop[i] - mean;
        cov += sp.cov_weights[i] * d * d.transpose();
    }
    ensure_spd(cov);

    GaussianComponent out;
    out.log_weight = comp.log_weight;
    out.mean = std::move(mean);
    out.cov = std::move(cov);
    return out;
}

UpdateCache ukf_update_cache(const GaussianComponent& comp, const StateMap& h,
                             const Mat& R, const UnscentedParams& params,
                             const std::vector<int>& angle_dims) {
    auto sp = ut_points(comp, params);
    std::vector<Vec> zs;
    zs.reserve(sp.points.size());
    for (const auto& p : sp.points) zs.push_back(h(p));
    // unwrap angular components relative to the central point before averaging
    for (int d : angle_dims) {
        double ref = zs[0](d);
        for (auto& z : zs) z(d) = ref + wrap_angle(z(d) - ref);
    }

    Vec z_mean = Vec::Zero(zs[0].size());
    for (std::size_t i = 0; i < zs.size(); ++i) z_mean += sp.mean_weights[i] * zs[i];
    Mat S = R;
    Mat C = Mat::Zero(comp.dim(), zs[0].size());
    for (std::size_t i = 0; i < zs.size(); ++i) {
        Vec dz = zs[i] - z_mean;
        Vec dx = sp.points[i] - comp.mean;
        S += sp.cov_weights[i] * dz * dz.transpose();
        C += sp.cov_weights[i] * dx * dz.transpose();
    }
    S = 0.5 * (S + S.transpose()).eval();

    UpdateCache cache;
    cache.prior_mean = comp.mean;
    for (int d : angle_dims) z_mean(d) = wrap_angle(z_mean(d));
    cache.z_pred = std::move(z_mean);
    cache.innov_llt = checked_llt(S, "ukf_update: singular innovation covariance");
    cache.log_norm = -0.5 * (S.rows() * std::log(2.0 * M_PI) +
                             log_det_from_llt(cache.innov_llt));
    cache.gain = cache.innov_llt.solve(C.transpose()).transpose();
    cache.post_cov = comp.cov - cache.gain * S * cache.gain.transpose();
    ensure_spd(cache.post_cov);
    cache.angle_dims = angle_dims;
    return cache;
}

std::pair<GaussianComponent, double> ukf_update(const GaussianComponent& comp,
                                                const Vec& z, const StateMap& h,
                                                const Mat& R,
                                                const UnscentedParams& params,
                                                const std::vector<int>& angle_dims) {
    auto cache = ukf_update_cache(comp, h, R, params, angle_dims);
    GaussianComponent out;
    out.log_weight = comp.log_weight;
    out.mean = cache.posterior_mean(z);
    out.cov = cache.post_cov;
    return {std::move(out), cache.log_likelihood(z)};
}

Mixture prune_merge(const Mixture& mix, double prune_thresh, double merge_thresh,
                    int max_comp) {
    if (mix.empty()) return {};
    const double total = mix.log_mass();
    if (total == neg_inf) return {};

    // prune on normalized weight
    std::vector<GaussianComponent> alive;
    for (const auto& c : mix.components) {
        if (std::exp(c.log_weight - total) >= prune_thresh) alive.push_back(c);
    }
    if (alive.empty()) {
        // keep the single heaviest component rather than dropping the track
        auto it = std::max_element(mix.components.begin(), mix.components.end(),
                                   [](const auto& a, const auto& b) {
                                       return a.log_weight < b.log_weight;
                                   });
        alive.push_back(*it);
    }

    std::vector<GaussianComponent> merged;
    std::vector<bool> used(alive.size(), false);
    for (;;) {
        int dominant = -1;
        for (std::size_t i = 0; i < alive.size(); ++i) {
            if (!used[i] &&
                (dominant < 0 || alive[i].log_weight > alive[dominant].log_weight))
                dominant = static_cast<int>(i);
        }
        if (dominant < 0) break;

        Eigen::LLT<Mat> llt(alive[dominant].cov);
        std::vector<int> group{dominant};
        used[dominant] = true;
        for (std::size_t i = 0; i < alive.size(); ++i) {
            if (used[i]) continue;
            Vec d = alive[i].mean - alive[dominant].mean;
            double maha = llt.info() == Eigen::Success ? d.dot(llt.solve(d)) : pos_inf;
            if (maha < merge_thresh) {
                group.push_back(static_cast<int>(i));
                used[i] = true;
            }
        }

        std::vector<double> lw;
        for (int i : group) lw.push_back(alive[i].log_weight);
        double group_mass = log_sum_exp(lw);
        Vec mean = Vec::Zero(alive[dominant].dim());
        for (int i : group)
            mean += std::exp(alive[i].log_weight - group_mass) * alive[i].mean;
        Mat cov = Mat::Zero(mean.size(), mean.size());
        for (int i : group) {
            Vec d = alive[i].mean - mean;
            cov += std::exp(alive[i].log_weight - group_mass) *
                   (alive[i].cov + d * d.transpose());
        }
        ensure_spd(cov);
        merged.push_back({group_mass, std::move(mean), std::move(cov)});
    }

    std::stable_sort(merged.begin(), merged.end(),
                     [](const auto& a, const auto& b) {
                         return a.log_weight > b.log_weight;
                     });
    if (static_cast<int>(merged.size()) > max_comp) merged.resize(max_comp);

    Mixture out{std::move(merged)};
    out.set_log_mass(total);
    return out;
}

}  // namespace glmb
