#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include "glmb/glmb_filter.hpp"
#include "support/oracles.hpp"

using namespace glmb;

namespace {

/// Tiny two-model 1D-position scenario for exhaustive oracle comparisons.
JmsModel mini_model(int num_sites = 2) {
    JmsModel model;
    model.sampling_interval = 1.0;
    model.survival_prob = 0.85;

    MotionModel m1{"linear", Mat(2, 2), Mat(2, 2), 2};
    m1.F << 1.0, 1.0, 0.0, 1.0;
    m1.Q << 0.5, 0.1, 0.1, 0.3;
    MotionModel m2{"linear", Mat(2, 2), Mat(2, 2), 2};
    m2.F << 1.0, 0.5, 0.0, 0.9;
    m2.Q << 1.0, 0.2, 0.2, 0.8;
    model.models = {m1, m2};

    model.switching.probs.resize(2, 2);
    model.switching.probs << 0.9, 0.1, 0.3, 0.7;

    SensorModel& s = model.sensor;
    s.kind = "linear";
    s.H.resize(1, 2);
    s.H << 1.0, 0.0;
    s.R = Mat::Identity(1, 1);
    s.detection_prob = 0.9;
    s.clutter_rate = 2.0;
    s.measurement_dim = 1;
    s.region.resize(1, 2);
    s.region << -50.0, 50.0;

    Vec prior(2);
    prior << 0.7, 0.3;
    BirthSite a{0.3, (Vec(2) << 0.0, 0.0).finished(),
                (Mat(2, 2) << 4.0, 0.0, 0.0, 1.0).finished(), prior};
    BirthSite b{0.25, (Vec(2) << 10.0, -0.5).finished(),
                (Mat(2, 2) << 3.0, 0.0, 0.0, 2.0).finished(), prior};
    model.birth.sites = {a, b};
    if (num_sites < 2) model.birth.sites.resize(num_sites);
    return model;
}

struct WeightedLabels {
    std::vector<Label> labels;
    double log_weight;
};

/// Sort terms by (label set, descending weight) for side-by-side comparison.
template <typename T>
std::vector<WeightedLabels> canonical(const std::vector<T>& terms) {
    std::vector<WeightedLabels> out;
    for (const auto& t : terms) out.push_back({t.labels, t.log_weight});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.labels != b.labels) return a.labels < b.labels;
        return a.log_weight > b.log_weight;
    });
    return out;
}

void check_same_terms(const GlmbDensity& fast, const oracle::BruteDensity& brute,
                      double tol) {
    auto a = canonical(fast.hypotheses);
    auto b = canonical(brute);
    REQUIRE(a.size() == b.size());
    bool labels_match = true;
    double max_err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        labels_match = labels_match && a[i].labels == b[i].labels;
        max_err = std::max(max_err, std::abs(std::exp(a[i].log_weight) -
                                             std::exp(b[i].log_weight)));
    }
    REQUIRE(labels_match);
    CHECK(max_err < tol);
}

void check_normalized(const GlmbDensity& density, double tol = 1e-9) {
    std::vector<double> w;
    for (const auto& h : density.hypotheses) w.push_back(h.log_weight);
    CHECK(std::abs(std::exp(log_sum_exp(w)) - 1.0) < tol);
    double max_err = 0.0;
    for (const auto& h : density.hypotheses)
        for (const auto& t : h.tracks)
            max_err = std::max(max_err, std::abs(std::exp(t->log_mass()) - 1.0));
    CHECK(max_err < tol);
}

std::vector<Vec> scan_of(std::initializer_list<double> zs) {
    std::vector<Vec> out;
    for (double z : zs) out.push_back(Vec::Constant(1, z));
    return out;
}

}  // namespace

TEST_CASE("initial density is one empty hypothesis of weight one") {
    auto d = GlmbDensity::initial();
    REQUIRE(d.hypotheses.size() == 1);
    CHECK(d.hypotheses[0].labels.empty());
    CHECK(d.hypotheses[0].log_weight == 0.0);
}

TEST_CASE("prediction from empty enumerates birth subsets with Bernoulli weights") {
    auto model = mini_model();
    auto pred = predict(GlmbDensity::initial(), model, 1);
    // subsets of two sites: {}, {1}, {2}, {1,2}
    REQUIRE(pred.hypotheses.size() == 4);
    std::map<int, double> by_card;
    for (const auto& h : pred.hypotheses)
        by_card[h.cardinality()] += std::exp(h.log_weight);
    CHECK(by_card[0] == doctest::Approx(0.7 * 0.75).epsilon(1e-12));
    CHECK(by_card[1] ==
          doctest::Approx(0.3 * 0.75 + 0.7 * 0.25).epsilon(1e-12));
    CHECK(by_card[2] == doctest::Approx(0.3 * 0.25).epsilon(1e-12));
    check_normalized(pred);
    for (const auto& h : pred.hypotheses)
        for (std::size_t i = 0; i < h.labels.size(); ++i) {
            CHECK(h.labels[i].birth_time == 1);
            // birth density matches the site prior
            Vec mean;
            Mat cov;
            h.track(i).moments(mean, cov);
            const auto& site = model.birth.sites[h.labels[i].birth_index - 1];
            CHECK((mean - site.mean).norm() < 1e-12);
            CHECK((cov - site.cov).norm() < 1e-12);
        }
}

TEST_CASE("mode-switched prediction multiplies component counts") {
    auto model = mini_model(1);
    auto pred1 = predict(GlmbDensity::initial(), model, 1);
    // find the single-track hypothesis and predict again
    GlmbDensity d;
    for (const auto& h : pred1.hypotheses)
        if (h.cardinality() == 1) d.hypotheses.push_back(h);
    d.normalize();
    model.birth.sites.clear();
    auto pred2 = predict(d, model, 2);
    for (const auto& h : pred2.hypotheses) {
        if (h.cardinality() == 0) continue;
        // each prior mode feeds both successor modes
        CHECK(h.track(0).per_mode[0].components.size() == 2);
        CHECK(h.track(0).per_mode[1].components.size() == 2);
        // mode marginal follows the switching chain: prior (0.7, 0.3)
        Vec probs = h.track(0).mode_probabilities();
        CHECK(probs(0) == doctest::Approx(0.7 * 0.9 + 0.3 * 0.3).epsilon(1e-12));
        CHECK(probs(1) == doctest::Approx(0.7 * 0.1 + 0.3 * 0.7).epsilon(1e-12));
    }
    check_normalized(pred2);
}

TEST_CASE("filter recursion matches exhaustive enumeration over histories") {
    std::mt19937_64 rng(20240816);
    std::uniform_real_distribution<double> uz(-25.0, 25.0);
    auto policy = TruncationPolicy::exact();

    int seeds_run = 0;
    for (int seed = 0; seed < 200; ++seed) {
        // births happen only at the first step, keeping label sets at <= 2
        // tracks so full enumeration stays tractable
        auto model = mini_model(1 + static_cast<int>(rng() % 2));
        auto later = model;
        later.birth.sites.clear();
        GlmbDensity fast = GlmbDensity::initial();
        oracle::BruteDensity brute{{}};
        brute[0].log_weight = 0.0;

        for (int k = 1; k <= 3; ++k) {
            const auto& mk = k == 1 ? model : later;
            fast = predict(fast, mk, k);
            brute = brute_predict(brute, mk, k);
            oracle::brute_normalize(brute);
            check_same_terms(fast, brute, 1e-9);

            ScanSet scan;
            scan.time = k;
            int m = static_cast<int>(rng() % 4);
            for (int j = 0; j < m; ++j)
                scan.measurements.push_back(Vec::Constant(1, uz(rng)));

            fast = update(fast, scan, mk, policy);
            brute = brute_update(brute, scan, mk);
            oracle::brute_normalize(brute);
            check_same_terms(fast, brute, 1e-9);
            check_normalized(fast);
        }
        ++seeds_run;
    }
    CHECK(seeds_run == 200);
}

TEST_CASE("single-target special case reduces to a standalone filter") {
    // one motion model, unit detection, no clutter, certain birth at the
    // first step: the lone track's density must equal a plain linear-Gaussian
    // recursion at every step
    auto model = mini_model(1);
    model.models.resize(1);
    model.switching.probs.resize(1, 1);
    model.switching.probs << 1.0;
    model.survival_prob = 1.0;
    model.sensor.detection_prob = 1.0;
    model.sensor.clutter_rate = 0.0;
    model.birth.sites[0].existence_prob = 1.0;
    model.birth.sites[0].mode_prior = Vec::Ones(1);

    auto no_birth = model;
    no_birth.birth.sites.clear();

    oracle::NaiveKf ref{model.birth.sites[0].mean, model.birth.sites[0].cov};
    auto policy = TruncationPolicy::exact();
    GlmbDensity d = GlmbDensity::initial();

    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, 1.0);
    double true_pos = 0.0, true_vel = 1.0;
    for (int k = 1; k <= 50; ++k) {
        d = predict(d, k == 1 ? model : no_birth, k);
        if (k > 1) ref.predict(model.models[0].F, model.models[0].Q);

        true_pos += true_vel;
        ScanSet scan;
        scan.time = k;
        scan.measurements.push_back(Vec::Constant(1, true_pos + g(rng)));
        d = update(d, scan, model, policy);
        ref.update(scan.measurements[0], model.sensor.H, model.sensor.R);

        REQUIRE(d.hypotheses.size() == 1);
        CHECK(std::exp(d.hypotheses[0].log_weight) ==
              doctest::Approx(1.0).epsilon(1e-12));
        REQUIRE(d.hypotheses[0].cardinality() == 1);
        Vec mean;
        Mat cov;
        d.hypotheses[0].track(0).moments(mean, cov);
        CHECK((mean - ref.mean).norm() <= 1e-9 * (1.0 + ref.mean.norm()));
        CHECK((cov - ref.cov).norm() <= 1e-9 * ref.cov.norm());
    }
}

TEST_CASE("truncation keeps the heaviest hypotheses and renormalizes") {
    GlmbDensity d;
    auto track = std::make_shared<ModeMixture>();
    track->per_mode.resize(1);
    track->per_mode[0].components.push_back(
        {0.0, Vec::Zero(2), Mat::Identity(2, 2)});
    for (int i = 0; i < 10; ++i) {
        GlmbHypothesis h;
        h.log_weight = -static_cast<double>(i) * 2.0;
        h.labels = {{1, i + 1}};
        h.tracks = {track};
        h.assoc_history = i;
        d.hypotheses.push_back(h);
    }
    d.normalize();

    TruncationPolicy policy;
    policy.max_hypotheses = 4;
    policy.min_log_weight = -15.0;
    auto out = truncate(d, policy);
    REQUIRE(out.hypotheses.size() == 4);
    check_normalized(out);
    // heaviest survive in order
    for (int i = 0; i < 4; ++i)
        CHECK(out.hypotheses[i].labels[0].birth_index == i + 1);

    // relative log-weight cut drops the tail even under a generous cap
    policy.max_hypotheses = 1000;
    policy.min_log_weight = -5.0;
    out = truncate(d, policy);
    REQUIRE(out.hypotheses.size() == 3);  // weights 0, -2, -4 relative
    check_normalized(out);
}

TEST_CASE("cardinality distribution sums hypothesis weights by label count") {
    auto model = mini_model();
    auto pred = predict(GlmbDensity::initial(), model, 1);
    auto rho = cardinality_distribution(pred);
    REQUIRE(rho.size() == 3);
    CHECK(rho[0] == doctest::Approx(0.7 * 0.75).epsilon(1e-12));
    CHECK(rho[1] == doctest::Approx(0.3 * 0.75 + 0.7 * 0.25).epsilon(1e-12));
    CHECK(rho[2] == doctest::Approx(0.3 * 0.25).epsilon(1e-12));
    double total = 0.0;
    for (double p : rho) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("extraction picks the MAP cardinality, preferring fewer on ties") {
    GlmbDensity d;
    auto track = std::make_shared<ModeMixture>();
    track->per_mode.resize(2);
    track->per_mode[0].components.push_back(
        {std::log(0.8), (Vec(2) << 1.0, 2.0).finished(), Mat::Identity(2, 2)});
    track->per_mode[1].components.push_back(
        {std::log(0.2), (Vec(2) << 3.0, 4.0).finished(), Mat::Identity(2, 2)});

    GlmbHypothesis empty;
    empty.log_weight = std::log(0.5);
    GlmbHypothesis one;
    one.log_weight = std::log(0.5);
    one.labels = {{2, 1}};
    one.tracks = {track};
    d.hypotheses = {empty, one};

    auto est = extract(d);
    CHECK(est.cardinality == 0);  // tie at 0.5/0.5 resolves to the smaller
    CHECK(est.targets.empty());

    d.hypotheses[1].log_weight = std::log(0.6);
    d.hypotheses[0].log_weight = std::log(0.4);
    est = extract(d);
    REQUIRE(est.cardinality == 1);
    CHECK(est.targets[0].label == Label{2, 1});
    CHECK(est.targets[0].mode == 0);  // argmax of the mode marginal
    CHECK(est.targets[0].mode_probs(0) == doctest::Approx(0.8).epsilon(1e-12));
    // moment-matched mean: 0.8*(1,2) + 0.2*(3,4)
    CHECK(est.targets[0].mean(0) == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(est.targets[0].mean(1) == doctest::Approx(2.4).epsilon(1e-12));
    CHECK(est.targets[0].mode_means[0](0) == doctest::Approx(1.0));
}

TEST_CASE("out-of-region measurements are ignored and counted") {
    auto model = mini_model(1);
    auto policy = TruncationPolicy::exact();
    auto pred = predict(GlmbDensity::initial(), model, 1);

    ScanSet scan;
    scan.time = 1;
    scan.measurements = scan_of({1.0, 75.0, -60.0});  // last two out of region

    int ignored = 0;
    auto post = update(pred, scan, model, policy, &ignored);
    CHECK(ignored == 2);

    ScanSet inside;
    inside.time = 1;
    inside.measurements = scan_of({1.0});
    auto post2 = update(pred, inside, model, policy);
    REQUIRE(post.hypotheses.size() == post2.hypotheses.size());
    auto a = canonical(post.hypotheses);
    auto b = canonical(post2.hypotheses);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].log_weight == doctest::Approx(b[i].log_weight).epsilon(1e-12));
}

TEST_CASE("weights remain normalized under fuzzed recursion with truncation") {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> uz(-30.0, 30.0);
    TruncationPolicy policy;  // production defaults
    for (int seed = 0; seed < 20; ++seed) {
        auto model = mini_model();
        GlmbDensity d = GlmbDensity::initial();
        for (int k = 1; k <= 6; ++k) {
            d = predict(d, model, k, &policy);
            check_normalized(d);
            d = truncate(d, policy);
            check_normalized(d);
            ScanSet scan;
            scan.time = k;
            int m = static_cast<int>(rng() % 5);
            for (int j = 0; j < m; ++j)
                scan.measurements.push_back(Vec::Constant(1, uz(rng)));
            d = update(d, scan, model, policy);
            check_normalized(d);
            d = truncate(d, policy);
            check_normalized(d);
        }
    }
}

TEST_CASE("filter_step is deterministic") {
    auto model = mini_model();
    TruncationPolicy policy;
    auto run = [&]() {
        GlmbDensity d = GlmbDensity::initial();
        std::string out;
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> uz(-30.0, 30.0);
        for (int k = 1; k <= 5; ++k) {
            ScanSet scan;
            scan.time = k;
            for (int j = 0; j < 3; ++j)
                scan.measurements.push_back(Vec::Constant(1, uz(rng)));
            auto step = filter_step(d, scan, model, policy, k);
            d = step.posterior;
            out += density_snapshot_json(d);
        }
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("diagnostics report hypothesis and component counts") {
    auto model = mini_model();
    TruncationPolicy policy;
    GlmbDensity d = GlmbDensity::initial();
    ScanSet scan;
    scan.time = 1;
    scan.measurements = scan_of({0.5, 11.0});
    auto step = filter_step(d, scan, model, policy, 1);
    CHECK(step.diagnostics.num_hypotheses ==
          static_cast<int>(step.posterior.hypotheses.size()));
    CHECK(step.diagnostics.eff_num_hypotheses > 0.0);
    CHECK(step.diagnostics.eff_num_hypotheses <=
          step.diagnostics.num_hypotheses + 1e-9);
    CHECK(step.diagnostics.ignored_measurements == 0);
}
