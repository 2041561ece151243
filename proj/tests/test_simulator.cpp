#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "glmb/simulator.hpp"

using namespace glmb;

TEST_CASE("identical seed yields identical truth and scans") {
    auto model = linear_scenario();
    auto script = default_linear_script(12345);
    auto t1 = simulate_truth(model, script);
    auto t2 = simulate_truth(model, script);
    REQUIRE(t1.size() == t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i) {
        REQUIRE(t1[i].states.size() == t2[i].states.size());
        for (std::size_t k = 0; k < t1[i].states.size(); ++k)
            CHECK((t1[i].states[k] - t2[i].states[k]).norm() == 0.0);
        CHECK(t1[i].modes == t2[i].modes);
    }
    auto s1 = simulate_scans(t1, model, 777);
    auto s2 = simulate_scans(t2, model, 777);
    REQUIRE(s1.size() == s2.size());
    for (std::size_t k = 0; k < s1.size(); ++k) {
        REQUIRE(s1[k].scan.measurements.size() == s2[k].scan.measurements.size());
        CHECK(s1[k].truth_index == s2[k].truth_index);
        for (std::size_t j = 0; j < s1[k].scan.measurements.size(); ++j)
            CHECK((s1[k].scan.measurements[j] - s2[k].scan.measurements[j]).norm() ==
                  0.0);
    }
}

TEST_CASE("zero process noise and an all-CV schedule give a straight line") {
    auto model = linear_scenario();
    ScenarioScript script;
    script.steps = 20;
    script.process_noise_scale = 0.0;
    BirthSpec spec;
    spec.step = 1;
    spec.site = 0;
    spec.initial_state = (Vec(4) << 1000.0, 10.0, -500.0, -5.0).finished();
    spec.mode_schedule.assign(20, 0);
    script.births = {spec};

    auto truths = simulate_truth(model, script);
    REQUIRE(truths.size() == 1);
    REQUIRE(truths[0].states.size() == 20);
    const double T = model.sampling_interval;
    for (int k = 1; k <= 20; ++k) {
        const Vec& x = truths[0].state_at(k);
        CHECK(x(0) == doctest::Approx(1000.0 + 10.0 * T * (k - 1)).epsilon(1e-12));
        CHECK(x(2) == doctest::Approx(-500.0 - 5.0 * T * (k - 1)).epsilon(1e-12));
        CHECK(x(1) == 10.0);
        CHECK(x(3) == -5.0);
    }
}

TEST_CASE("scripted turn follows a circle of radius speed over rate") {
    auto model = linear_scenario();
    ScenarioScript script;
    script.steps = 10;
    script.process_noise_scale = 0.0;
    BirthSpec spec;
    spec.step = 1;
    spec.site = 0;
    spec.initial_state = (Vec(4) << 0.0, 100.0, 0.0, 0.0).finished();
    spec.mode_schedule.assign(10, 1);  // right turn, omega = 5 deg/s
    script.births = {spec};

    auto truths = simulate_truth(model, script);
    const double w = 5.0 * M_PI / 180.0;
    const double radius = 100.0 / w;
    // positive omega rotates the velocity counterclockwise, so the circle
    // center sits at +radius perpendicular to the initial velocity
    Vec center(2);
    center << 0.0, radius;
    for (int k = 1; k <= 10; ++k) {
        const Vec& x = truths[0].state_at(k);
        double r = std::hypot(x(0) - center(0), x(2) - center(1));
        CHECK(r == doctest::Approx(radius).epsilon(1e-9));
        CHECK(std::hypot(x(1), x(3)) == doctest::Approx(100.0).epsilon(1e-9));
    }
}

TEST_CASE("sampled mode transitions match the switching matrix") {
    auto model = linear_scenario();
    ScenarioScript script;
    script.steps = 100001;
    script.rng_seed = 2718;
    BirthSpec spec;
    spec.step = 1;
    spec.site = 2;
    spec.initial_state = (Vec(4) << 0.0, 0.0, 0.0, 0.0).finished();
    script.process_noise_scale = 0.0;  // noise irrelevant to mode statistics
    script.births = {spec};

    auto truths = simulate_truth(model, script);
    const auto& modes = truths[0].modes;
    Mat counts = Mat::Zero(3, 3);
    for (std::size_t i = 1; i < modes.size(); ++i)
        counts(modes[i - 1], modes[i]) += 1.0;
    for (int r = 0; r < 3; ++r) {
        double row = counts.row(r).sum();
        REQUIRE(row > 1000);
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(counts(r, c) / row - model.switching.probs(r, c)) <
                  0.01);
    }
}

TEST_CASE("detection statistics and measurement noise match the sensor") {
    auto model = linear_scenario();
    model.sensor.clutter_rate = 0.0;
    ScenarioScript script;
    script.steps = 12000;
    script.process_noise_scale = 0.0;
    BirthSpec spec;
    spec.step = 1;
    spec.site = 2;
    spec.initial_state = (Vec(4) << -10000.0, 0.0, 0.0, 0.0).finished();
    spec.mode_schedule.assign(script.steps, 0);
    script.births = {spec};

    auto truths = simulate_truth(model, script);
    auto scans = simulate_scans(truths, model, 42);

    int detections = 0;
    std::vector<double> residuals;
    for (const auto& s : scans) {
        for (std::size_t j = 0; j < s.scan.measurements.size(); ++j) {
            REQUIRE(s.truth_index[j] == 0);
            ++detections;
            const Vec& z = s.scan.measurements[j];
            residuals.push_back(z(0) - (-10000.0));
            residuals.push_back(z(1) - 0.0);
        }
    }
    // detection frequency ~ 0.97
    double pd_hat = static_cast<double>(detections) / script.steps;
    CHECK(std::abs(pd_hat - 0.97) < 0.01);
    // residual sample std within 5% of 40 m
    double mean = 0.0;
    for (double r : residuals) mean += r;
    mean /= residuals.size();
    double var = 0.0;
    for (double r : residuals) var += (r - mean) * (r - mean);
    var /= (residuals.size() - 1);
    CHECK(std::abs(std::sqrt(var) - 40.0) < 0.05 * 40.0);
}

TEST_CASE("clutter counts are Poisson with the configured rate") {
    auto model = linear_scenario();
    std::vector<TruthTrajectory> no_targets;
    TruthTrajectory dummy;  // keeps the scan loop alive for 1000 steps
    dummy.birth_step = 1;
    dummy.death_step = 1000;
    dummy.states.assign(1000, (Vec(4) << 0, 0, 0, 0).finished());
    dummy.modes.assign(1000, 0);
    model.sensor.detection_prob = 0.0;  // only clutter remains
    auto scans = simulate_scans({dummy}, model, 31);
    REQUIRE(scans.size() == 1000);
    double total = 0.0;
    for (const auto& s : scans) {
        total += static_cast<double>(s.scan.measurements.size());
        for (const auto& z : s.scan.measurements) CHECK(model.sensor.in_region(z));
        for (int idx : s.truth_index) CHECK(idx == -1);
    }
    double mean = total / 1000.0;
    // 3-sigma band for the mean of 1000 Poisson(60) draws
    CHECK(std::abs(mean - 60.0) < 3.0 * std::sqrt(60.0 / 1000.0) + 0.5);
}

TEST_CASE("all measurements stay inside the observation region") {
    for (bool nonlinear : {false, true}) {
        auto model = nonlinear ? nonlinear_scenario() : linear_scenario();
        auto script = nonlinear ? default_nonlinear_script(5)
                                : default_linear_script(5);
        auto truths = simulate_truth(model, script);
        auto scans = simulate_scans(truths, model, 6);
        for (const auto& s : scans)
            for (const auto& z : s.scan.measurements)
                CHECK(model.sensor.in_region(z));
    }
}

TEST_CASE("default scripts stage three staggered long-lived targets") {
    for (bool nonlinear : {false, true}) {
        auto script = nonlinear ? default_nonlinear_script(1)
                                : default_linear_script(1);
        auto model = nonlinear ? nonlinear_scenario() : linear_scenario();
        REQUIRE(script.births.size() == 3);
        CHECK(script.births[0].step == 1);
        CHECK(script.births[1].step == 10);
        CHECK(script.births[2].step == 20);
        auto truths = simulate_truth(model, script);
        for (const auto& t : truths) {
            CHECK(t.death_step == script.steps);
            CHECK(t.modes.front() == 0);  // constant-velocity start
            // trajectories must stay inside the +-60 km observation area
            for (const auto& x : t.states) {
                CHECK(std::abs(x(0)) < 60000.0);
                CHECK(std::abs(x(2)) < 60000.0);
            }
        }
    }
}

TEST_CASE("scripted death step truncates the trajectory") {
    auto model = linear_scenario();
    ScenarioScript script;
    script.steps = 50;
    BirthSpec spec;
    spec.step = 5;
    spec.site = 0;
    spec.death_step = 30;
    script.births = {spec};
    auto truths = simulate_truth(model, script);
    REQUIRE(truths.size() == 1);
    CHECK(truths[0].birth_step == 5);
    CHECK(truths[0].death_step == 30);
    CHECK(truths[0].states.size() == 26);
    CHECK(truths[0].alive_at(30));
    CHECK(!truths[0].alive_at(31));
    CHECK(truths[0].label == Label{5, 1});
}

TEST_CASE("invalid scripts are rejected") {
    auto model = linear_scenario();
    ScenarioScript script;
    script.steps = 10;
    BirthSpec spec;
    spec.step = 11;
    script.births = {spec};
    CHECK_THROWS_AS(simulate_truth(model, script), ConfigError);
    script.births[0].step = 1;
    script.births[0].site = 7;
    CHECK_THROWS_AS(simulate_truth(model, script), ConfigError);
}

TEST_CASE("noise sampling reproduces the covariance, singular cases included") {
    std::mt19937_64 rng(8);
    // rank-deficient: the scenario process noise block
    auto model = linear_scenario();
    const Mat& Q = model.models[0].Q;
    Mat acc = Mat::Zero(4, 4);
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        Vec v = sample_noise(Q, rng);
        acc += v * v.transpose();
    }
    acc /= n;
    CHECK((acc - Q).norm() < 0.05 * Q.norm());
}

TEST_CASE("random birth scripts respect the configured horizon") {
    auto model = linear_scenario();
    auto script = random_birth_script(model, 40, 9);
    CHECK(script.steps == 40);
    CHECK(!script.births.empty());
    for (const auto& b : script.births) {
        CHECK(b.step >= 1);
        CHECK(b.step <= 40);
        CHECK(b.death_step <= 40);
        CHECK(b.site >= 0);
        CHECK(b.site < 3);
    }
}
