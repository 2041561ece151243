#include "glmb/simulator.hpp"

#include <algorithm>
#include <numeric>

namespace glmb {

Vec sample_noise(const Mat& cov, std::mt19937_64& rng) {
    // LDLT so rank-deficient covariances still sample correctly
    Eigen::LDLT<Mat> ldlt(cov);
    Vec d = ldlt.vectorD();
    std::normal_distribution<double> unit(0.0, 1.0);
    Vec z(cov.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z(i) = unit(rng) * std::sqrt(std::max(d(i), 0.0));
    Mat L = ldlt.matrixL();
    return ldlt.transpositionsP().transpose() * (L * z);
}

namespace {

int sample_discrete(const Vec& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    double acc = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
        acc += probs(i);
        if (x < acc) return i;
    }
    return static_cast<int>(probs.size()) - 1;
}

double reflect_into(double x, double lo, double hi) {
    const double span = hi - lo;
    if (span <= 0.0) return lo;
    double t = std::fmod(x - lo, 2.0 * span);
    if (t < 0.0) t += 2.0 * span;
    return t <= span ? lo + t : hi - (t - span);
}

}  // namespace

std::vector<TruthTrajectory> simulate_truth(const JmsModel& model,
                                            const ScenarioScript& script) {
    std::mt19937_64 rng(script.rng_seed);
    const double T = model.sampling_interval;
    std::vector<TruthTrajectory> truths;
    std::vector<int> births_at_step(script.steps + 1, 0);

    for (const auto& spec : script.births) {
        if (spec.step < 1 || spec.step > script.steps)
            throw ConfigError("birth step outside scenario length");
        if (spec.site < 0 || spec.site >= static_cast<int>(model.birth.sites.size()))
            throw ConfigError("birth site index out of range");

        TruthTrajectory traj;
        traj.birth_step = spec.step;
        traj.death_step = spec.death_step > 0
                              ? std::min(spec.death_step, script.steps)
                              : script.steps;
        traj.label = Label{spec.step, ++births_at_step[spec.step]};

        const auto& site = model.birth.sites[spec.site];
        Vec state = spec.initial_state.size() > 0
                        ? spec.initial_state
                        : Vec(site.mean + sample_noise(site.cov, rng));
        int mode = spec.mode_schedule.empty()
                       ? sample_discrete(site.mode_prior, rng)
                       : spec.mode_schedule.front();

        traj.states.push_back(state);
        traj.modes.push_back(mode);
        for (int step = traj.birth_step + 1; step <= traj.death_step; ++step) {
            int idx = step - traj.birth_step;
            if (!spec.mode_schedule.empty()) {
                mode = idx < static_cast<int>(spec.mode_schedule.size())
                           ? spec.mode_schedule[idx]
                           : spec.mode_schedule.back();
            } else {
                mode = sample_discrete(model.switching.probs.row(mode), rng);
            }
            const auto& mm = model.models[mode];
            state = mm.propagate_mean(state, T) +
                    sample_noise(script.process_noise_scale * mm.Q, rng);
            traj.states.push_back(state);
            traj.modes.push_back(mode);
        }
        truths.push_back(std::move(traj));
    }
    return truths;
}

std::vector<SimulatedScan> simulate_scans(const std::vector<TruthTrajectory>& truths,
                                          const JmsModel& model,
                                          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto& sensor = model.sensor;
    auto h = sensor.measurement_map();
    const auto angle_dims = sensor.angle_dims();

    int steps = 0;
    for (const auto& t : truths) steps = std::max(steps, t.death_step);

    std::vector<SimulatedScan> scans;
    scans.reserve(steps);
    for (int k = 1; k <= steps; ++k) {
        SimulatedScan s;
        s.scan.time = k;
        for (std::size_t t = 0; t < truths.size(); ++t) {
            if (!truths[t].alive_at(k)) continue;
            if (u01(rng) >= sensor.detection_prob) continue;
            Vec z = h(truths[t].state_at(k)) + sample_noise(sensor.R, rng);
            for (int d : angle_dims) z(d) = wrap_angle(z(d));
            for (int d = 0; d < z.size(); ++d)
                z(d) = reflect_into(z(d), sensor.region(d, 0), sensor.region(d, 1));
            s.scan.measurements.push_back(std::move(z));
            s.truth_index.push_back(static_cast<int>(t));
        }
        std::poisson_distribution<int> poisson(sensor.clutter_rate);
        int n_clutter = sensor.clutter_rate > 0.0 ? poisson(rng) : 0;
        for (int c = 0; c < n_clutter; ++c) {
            Vec z(sensor.measurement_dim);
            for (int d = 0; d < z.size(); ++d) {
                std::uniform_real_distribution<double> ud(sensor.region(d, 0),
                                                          sensor.region(d, 1));
                z(d) = ud(rng);
            }
            s.scan.measurements.push_back(std::move(z));
            s.truth_index.push_back(-1);
        }
        // shuffle so target-originated returns are not always first
        std::vector<int> order(s.scan.measurements.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        SimulatedScan shuffled;
        shuffled.scan.time = k;
        for (int idx : order) {
            shuffled.scan.measurements.push_back(std::move(s.scan.measurements[idx]));
            shuffled.truth_index.push_back(s.truth_index[idx]);
        }
        scans.push_back(std::move(shuffled));
    }
    return scans;
}

namespace {

std::vector<int> segments(std::initializer_list<std::pair<int, int>> spans) {
    // spans: (mode, length)
    std::vector<int> out;
    for (auto [mode, len] : spans)
        out.insert(out.end(), len, mode);
    return out;
}

Vec state4(double x, double vx, double y, double vy) {
    Vec s(4);
    s << x, vx, y, vy;
    return s;
}

Vec state5(double x, double vx, double y, double vy, double omega) {
    Vec s(5);
    s << x, vx, y, vy, omega;
    return s;
}

}  // namespace

ScenarioScript default_linear_script(std::uint64_t seed) {
    ScenarioScript script;
    script.steps = 100;
    script.rng_seed = seed;
    script.process_noise_scale = 0.01;

    // modes: 0 = CV, 1 = right turn, 2 = left turn
    BirthSpec t1;
    t1.step = 1;
    t1.site = 0;
    t1.initial_state = state4(40000, -75, -50000, 95);
    t1.mode_schedule = segments({{0, 35}, {1, 5}, {0, 30}, {2, 5}, {0, 25}});

    BirthSpec t2;
    t2.step = 10;
    t2.site = 1;
    t2.initial_state = state4(-50000, 90, 40000, -70);
    t2.mode_schedule = segments({{0, 30}, {2, 5}, {0, 26}, {1, 5}, {0, 25}});

    BirthSpec t3;
    t3.step = 20;
    t3.site = 2;
    t3.initial_state = state4(-10000, 85, 0, 65);
    t3.mode_schedule = segments({{0, 25}, {1, 4}, {0, 22}, {2, 4}, {0, 26}});

    script.births = {t1, t2, t3};
    return script;
}

ScenarioScript default_nonlinear_script(std::uint64_t seed) {
    ScenarioScript script;
    script.steps = 100;
    script.rng_seed = seed;
    script.process_noise_scale = 0.01;

    // modes: 0 = CV, 1 = coordinated turn (unknown rate)
    BirthSpec t1;
    t1.step = 1;
    t1.site = 0;
    t1.initial_state = state5(40000, -70, -50000, 90, 0.02);
    t1.mode_schedule = segments({{0, 40}, {1, 12}, {0, 48}});

    BirthSpec t2;
    t2.step = 10;
    t2.site = 1;
    t2.initial_state = state5(-50000, 85, 40000, -65, -0.02);
    t2.mode_schedule = segments({{0, 35}, {1, 12}, {0, 44}});

    BirthSpec t3;
    t3.step = 20;
    t3.site = 2;
    t3.initial_state = state5(-10000, 80, 0, 60, 0.025);
    t3.mode_schedule = segments({{0, 30}, {1, 10}, {0, 41}});

    script.births = {t1, t2, t3};
    return script;
}

ScenarioScript random_birth_script(const JmsModel& model, int steps,
                                   std::uint64_t seed) {
    ScenarioScript script;
    script.steps = steps;
    script.rng_seed = seed;
    std::mt19937_64 rng(seed ^ 0x5eedb1d7u);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::geometric_distribution<int> lifetime(
        std::max(1e-6, 1.0 - model.survival_prob));
    for (int k = 1; k <= steps; ++k) {
        for (std::size_t i = 0; i < model.birth.sites.size(); ++i) {
            if (u01(rng) >= model.birth.sites[i].existence_prob) continue;
            BirthSpec spec;
            spec.step = k;
            spec.site = static_cast<int>(i);
            spec.death_step = std::min(steps, k + lifetime(rng));
            script.births.push_back(spec);
        }
    }
    return script;
}

}  // namespace glmb
