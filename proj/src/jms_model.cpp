#include "glmb/jms_model.hpp"

namespace glmb {

Mat ct_matrix(double omega, double T) {
    Mat F(4, 4);
    if (std::abs(omega * T) < 1e-9) {
        // analytic limit: sin(Tw)/w -> T, (cos(Tw)-1)/w -> 0
        F << 1, T, 0, 0,
             0, 1, 0, 0,
             0, 0, 1, T,
             0, 0, 0, 1;
        return F;
    }
    const double s = std::sin(T * omega);
    const double c = std::cos(T * omega);
    F << 1, s / omega,        0, (c - 1) / omega,
         0, c,                0, -s,
         0, -(c - 1) / omega, 1, s / omega,
         0, s,                0, c;
    return F;
}

Vec ct_unknown_rate(const Vec& state, double T) {
    if (state.size() != 5)
        throw ConfigError("ct_unknown_rate: state must be 5-dimensional");
    Mat F = ct_matrix(state(4), T);
    Vec out(5);
    out.head(4) = F * state.head(4);
    out(4) = state(4);
    return out;
}

Vec MotionModel::propagate_mean(const Vec& x, double T) const {
    if (linear()) return F * x;
    if (kind == "ct_unknown_rate") return ct_unknown_rate(x, T);
    throw ConfigError("unknown motion model kind: " + kind);
}

StateMap MotionModel::state_map(double T) const {
    if (linear()) {
        Mat Fc = F;
        return [Fc](const Vec& x) { return Vec(Fc * x); };
    }
    if (kind == "ct_unknown_rate")
        return [T](const Vec& x) { return ct_unknown_rate(x, T); };
    throw ConfigError("unknown motion model kind: " + kind);
}

void SwitchingMatrix::validate() const {
    if (probs.rows() != probs.cols())
        throw ConfigError("switching matrix must be square");
    for (int i = 0; i < probs.rows(); ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < probs.cols(); ++j) {
            double p = probs(i, j);
            if (p < 0.0 || p > 1.0)
                throw ConfigError("switching probability outside [0,1]");
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > 1e-12)
            throw ConfigError("switching matrix row does not sum to 1");
    }
}

StateMap SensorModel::measurement_map() const {
    if (linear()) {
        Mat Hc = H;
        return [Hc](const Vec& x) { return Vec(Hc * x); };
    }
    if (kind == "bearing_range") {
        return [](const Vec& x) {
            Vec z(2);
            z(0) = std::atan2(x(2), x(0));
            z(1) = std::sqrt(x(0) * x(0) + x(2) * x(2));
            return z;
        };
    }
    throw ConfigError("unknown sensor kind: " + kind);
}

std::vector<int> SensorModel::angle_dims() const {
    if (kind == "bearing_range") return {0};
    return {};
}

double SensorModel::region_volume() const {
    double v = 1.0;
    for (int i = 0; i < region.rows(); ++i) v *= region(i, 1) - region(i, 0);
    return v;
}

bool SensorModel::in_region(const Vec& z) const {
    for (int i = 0; i < region.rows(); ++i)
        if (z(i) < region(i, 0) || z(i) > region(i, 1)) return false;
    return true;
}

double SensorModel::log_clutter_density() const {
    double rate = std::max(clutter_rate, 1e-30);  // keep log finite at rate 0
    return std::log(rate) - std::log(region_volume());
}

void JmsModel::validate() const {
    if (models.empty()) throw ConfigError("model set is empty");
    switching.validate();
    if (switching.size() != num_models())
        throw ConfigError("switching matrix size does not match model count");
    for (const auto& m : models)
        if (m.state_dim != state_dim())
            throw ConfigError("motion models disagree on state dimension");
    if (sensor.detection_prob < 0.0 || sensor.detection_prob > 1.0)
        throw ConfigError("detection probability outside [0,1]");
    if (survival_prob < 0.0 || survival_prob > 1.0)
        throw ConfigError("survival probability outside [0,1]");
    for (const auto& site : birth.sites) {
        if (site.existence_prob < 0.0 || site.existence_prob > 1.0)
            throw ConfigError("birth existence probability outside [0,1]");
        if (site.mode_prior.size() != num_models())
            throw ConfigError("birth mode prior size does not match model count");
        if (std::abs(site.mode_prior.sum() - 1.0) > 1e-12)
            throw ConfigError("birth mode prior does not sum to 1");
    }
}

double joint_transition_density(const Vec& zeta_prev, int r_prev, const Vec& zeta,
                                int r, const JmsModel& model) {
    if (r < 0 || r >= model.num_models() || r_prev < 0 || r_prev >= model.num_models())
        throw ConfigError("joint_transition_density: invalid model index");
    double sw = model.switching.prob(r, r_prev);
    if (sw == 0.0) return 0.0;
    const auto& mm = model.models[r];
    Vec pred = mm.propagate_mean(zeta_prev, model.sampling_interval);
    return sw * std::exp(log_gaussian(zeta - pred, mm.Q));
}

namespace {

Mat cv_process_noise(double sigma, double T) {
    Mat Q(4, 4);
    const double t2 = T * T, t3 = t2 * T, t4 = t3 * T;
    Q << t4 / 4, t3 / 2, 0, 0,
         t3 / 2, t2,     0, 0,
         0, 0, t4 / 4, t3 / 2,
         0, 0, t3 / 2, t2;
    return sigma * sigma * Q;
}

Mat ct5_process_noise(double sigma_v, double sigma_w, double T) {
    Mat Q = Mat::Zero(5, 5);
    Q.topLeftCorner(4, 4) = cv_process_noise(sigma_v, T);
    Q(4, 4) = sigma_w * sigma_w * T * T;
    return Q;
}

}  // namespace

JmsModel linear_scenario() {
    const double T = 5.0;
    JmsModel model;
    model.sampling_interval = T;
    model.survival_prob = 0.99;

    MotionModel cv{"linear", ct_matrix(0.0, T), cv_process_noise(5.0, T), 4};
    MotionModel right{"linear", ct_matrix(5.0 * M_PI / 180.0, T),
                      cv_process_noise(20.0, T), 4};
    MotionModel left{"linear", ct_matrix(-5.0 * M_PI / 180.0, T),
                     cv_process_noise(20.0, T), 4};
    model.models = {cv, right, left};

    model.switching.probs.resize(3, 3);
    model.switching.probs << 0.8, 0.1, 0.1,
                             0.2, 0.8, 0.0,
                             0.2, 0.0, 0.8;

    SensorModel& s = model.sensor;
    s.kind = "linear";
    s.H.resize(2, 4);
    s.H << 1, 0, 0, 0,
           0, 0, 1, 0;
    s.R = 40.0 * 40.0 * Mat::Identity(2, 2);
    s.detection_prob = 0.97;
    s.clutter_rate = 60.0;
    s.measurement_dim = 2;
    s.region.resize(2, 2);
    s.region << -60000, 60000,
                -60000, 60000;

    Mat P_L = Mat::Zero(4, 4);
    P_L.diagonal() << 1000, 300, 1000, 300;

    Vec mode_prior(3);
    mode_prior << 1, 0, 0;
    auto site = [&](double x, double y) {
        Vec m(4);
        m << x, 0, y, 0;
        return BirthSite{0.2, m, P_L, mode_prior};
    };
    model.birth.sites = {site(40000, -50000), site(-50000, 40000), site(-10000, 0)};
    return model;
}

JmsModel nonlinear_scenario() {
    const double T = 5.0;
    JmsModel model;
    model.sampling_interval = T;
    model.survival_prob = 0.99;

    Mat F_cv = Mat::Identity(5, 5);
    F_cv.topLeftCorner(4, 4) = ct_matrix(0.0, T);
    MotionModel cv{"linear", F_cv, ct5_process_noise(5.0, default_turn_noise_std, T), 5};
    MotionModel ct{"ct_unknown_rate", Mat(),
                   ct5_process_noise(20.0, default_turn_noise_std, T), 5};
    model.models = {cv, ct};

    model.switching.probs.resize(2, 2);
    model.switching.probs << 0.8, 0.2,
                             0.2, 0.8;

    SensorModel& s = model.sensor;
    s.kind = "bearing_range";
    s.R = Mat::Zero(2, 2);
    s.R.diagonal() << std::pow(M_PI / 180.0, 2), 20.0 * 20.0;
    s.detection_prob = 0.97;
    s.clutter_rate = 60.0;
    s.measurement_dim = 2;
    s.region.resize(2, 2);
    s.region << -M_PI, M_PI,
                0.0, 60000.0 * std::sqrt(2.0);

    Mat P_NL = Mat::Zero(5, 5);
    P_NL.diagonal() << 1000, 300, 1000, 300, 1e-4;

    Vec mode_prior(2);
    mode_prior << 1, 0;
    auto site = [&](double x, double y) {
        Vec m(5);
        m << x, 0, y, 0, 0;
        return BirthSite{0.2, m, P_NL, mode_prior};
    };
    model.birth.sites = {site(40000, -50000), site(-50000, 40000), site(-10000, 0)};
    return model;
}

}  // namespace glmb
