#include "glmb/glmb_filter.hpp"

#include <unordered_map>

#include <json.hpp>

#include "glmb/assignment.hpp"

namespace glmb {

double ModeMixture::log_mass() const {
    std::vector<double> lm;
    lm.reserve(per_mode.size());
    for (const auto& mix : per_mode) lm.push_back(mix.log_mass());
    return log_sum_exp(lm);
}

void ModeMixture::normalize() {
    double total = log_mass();
    if (total == neg_inf) return;
    for (auto& mix : per_mode)
        for (auto& c : mix.components) c.log_weight -= total;
}

Vec ModeMixture::mode_probabilities() const {
    Vec probs(num_modes());
    double total = log_mass();
    for (int r = 0; r < num_modes(); ++r) {
        double lm = per_mode[r].log_mass();
        probs(r) = lm == neg_inf ? 0.0 : std::exp(lm - total);
    }
    return probs;
}

void ModeMixture::moments(Vec& mean, Mat& cov) const {
    double total = log_mass();
    int dim = 0;
    for (const auto& mix : per_mode)
        if (!mix.empty()) dim = mix.components.front().dim();
    mean = Vec::Zero(dim);
    cov = Mat::Zero(dim, dim);
    for (const auto& mix : per_mode)
        for (const auto& c : mix.components)
            mean += std::exp(c.log_weight - total) * c.mean;
    for (const auto& mix : per_mode)
        for (const auto& c : mix.components) {
            Vec d = c.mean - mean;
            cov += std::exp(c.log_weight - total) * (c.cov + d * d.transpose());
        }
}

Vec ModeMixture::mode_conditioned_mean(int r) const {
    const auto& mix = per_mode[r];
    if (mix.empty()) return Vec();
    double lm = mix.log_mass();
    Vec mean = Vec::Zero(mix.components.front().dim());
    for (const auto& c : mix.components)
        mean += std::exp(c.log_weight - lm) * c.mean;
    return mean;
}

GlmbDensity GlmbDensity::initial() {
    GlmbDensity d;
    d.hypotheses.push_back(GlmbHypothesis{});
    return d;
}

void GlmbDensity::normalize() {
    std::vector<double> lw;
    lw.reserve(hypotheses.size());
    for (const auto& h : hypotheses) lw.push_back(h.log_weight);
    double total = log_sum_exp(lw);
    if (total == neg_inf) return;
    for (auto& h : hypotheses) h.log_weight -= total;
}

TruncationPolicy TruncationPolicy::exact() {
    TruncationPolicy p;
    p.max_hypotheses = std::numeric_limits<int>::max();
    p.min_log_weight = neg_inf;
    p.prune_thresh = 0.0;
    p.merge_thresh = 0.0;
    p.max_components = std::numeric_limits<int>::max();
    p.gate = false;
    return p;
}

namespace {

bool mixture_management_active(const TruncationPolicy& p) {
    return p.prune_thresh > 0.0 || p.merge_thresh > 0.0 ||
           p.max_components < std::numeric_limits<int>::max();
}

void manage_track_mixtures(ModeMixture& track, const TruncationPolicy& p) {
    if (!mixture_management_active(p)) return;
    for (auto& mix : track.per_mode)
        mix = prune_merge(mix, p.prune_thresh, p.merge_thresh, p.max_components);
    track.normalize();
}

/// Propagate one normalized track density one step: the predicted mode-r
/// mixture collects every prior-mode component pushed through model r,
/// weighted by the switching probability.
ModeMixture predict_track(const ModeMixture& prior, const JmsModel& model,
                          const TruncationPolicy* policy) {
    const int R = model.num_models();
    ModeMixture out;
    out.per_mode.resize(R);
    const auto ut = model.ut_params();
    for (int r = 0; r < R; ++r) {
        const auto& mm = model.models[r];
        StateMap f;
        if (!mm.linear()) f = mm.state_map(model.sampling_interval);
        for (int rp = 0; rp < R; ++rp) {
            double sw = model.switching.prob(r, rp);
            if (sw <= 0.0) continue;
            double log_sw = std::log(sw);
            for (const auto& comp : prior.per_mode[rp].components) {
                GaussianComponent pred =
                    mm.linear() ? kalman_predict(comp, mm.F, mm.Q)
                                : ukf_predict(comp, f, mm.Q, ut);
                pred.log_weight += log_sw;
                out.per_mode[r].components.push_back(std::move(pred));
            }
        }
    }
    if (policy) manage_track_mixtures(out, *policy);
    return out;
}

ModeMixture birth_track(const BirthSite& site, const JmsModel& model) {
    ModeMixture out;
    out.per_mode.resize(model.num_models());
    for (int r = 0; r < model.num_models(); ++r) {
        double p = site.mode_prior(r);
        if (p <= 0.0) continue;
        out.per_mode[r].components.push_back(
            {std::log(p), site.mean, site.cov});
    }
    return out;
}

}  // namespace

GlmbDensity predict(const GlmbDensity& prior, const JmsModel& model, int k,
                    const TruncationPolicy* policy) {
    const double ps = model.survival_prob;
    const double log_ps = ps > 0.0 ? std::log(ps) : neg_inf;
    const double log_qs = ps < 1.0 ? std::log1p(-ps) : neg_inf;
    const double surv_best = std::max(log_ps, log_qs);

    const auto& sites = model.birth.sites;
    const int S = static_cast<int>(sites.size());
    std::vector<double> log_rb(S), log_qb(S);
    double birth_best = 0.0;
    for (int i = 0; i < S; ++i) {
        double rb = sites[i].existence_prob;
        log_rb[i] = rb > 0.0 ? std::log(rb) : neg_inf;
        log_qb[i] = rb < 1.0 ? std::log1p(-rb) : neg_inf;
        birth_best += std::max(log_rb[i], log_qb[i]);
    }

    double global_best = neg_inf;
    for (const auto& h : prior.hypotheses)
        global_best = std::max(global_best,
                               h.log_weight + h.cardinality() * surv_best + birth_best);
    const double cutoff =
        policy ? global_best + policy->min_log_weight : neg_inf;

    std::vector<TrackDensityPtr> birth_densities;
    birth_densities.reserve(S);
    for (const auto& site : sites)
        birth_densities.push_back(
            std::make_shared<ModeMixture>(birth_track(site, model)));

    GlmbDensity out;
    out.time_index = k;

    for (const auto& parent : prior.hypotheses) {
        const int n = parent.cardinality();
        std::vector<TrackDensityPtr> predicted;
        predicted.reserve(n);
        for (int i = 0; i < n; ++i)
            predicted.push_back(std::make_shared<ModeMixture>(
                predict_track(parent.track(i), model, policy)));

        // branch-and-bound over survivor and birth subsets
        std::vector<int> alive, born;
        auto emit = [&](double log_w) {
            GlmbHypothesis child;
            child.log_weight = log_w;
            child.assoc_history = parent.assoc_history;
            child.labels.reserve(alive.size() + born.size());
            child.tracks.reserve(alive.size() + born.size());
            for (int i : alive) {
                child.labels.push_back(parent.labels[i]);
                child.tracks.push_back(predicted[i]);
            }
            for (int i : born) {
                child.labels.push_back(Label{k, i + 1});
                child.tracks.push_back(birth_densities[i]);
            }
            out.hypotheses.push_back(std::move(child));
        };

        std::function<void(int, double)> recurse = [&](int pos, double log_w) {
            if (log_w == neg_inf) return;
            double remaining = 0.0;
            if (pos < n)
                remaining = (n - pos) * surv_best + birth_best;
            else
                for (int i = pos - n; i < S; ++i)
                    remaining += std::max(log_rb[i], log_qb[i]);
            if (log_w + remaining < cutoff) return;

            if (pos == n + S) {
                emit(log_w);
                return;
            }
            if (pos < n) {
                alive.push_back(pos);
                recurse(pos + 1, log_w + log_ps);
                alive.pop_back();
                recurse(pos + 1, log_w + log_qs);
            } else {
                int i = pos - n;
                born.push_back(i);
                recurse(pos + 1, log_w + log_rb[i]);
                born.pop_back();
                recurse(pos + 1, log_w + log_qb[i]);
            }
        };
        recurse(0, parent.log_weight);
    }

    out.normalize();
    return out;
}

namespace {

/// Per unique predicted track density: measurement-update caches per mode
/// component, mode-summed detection scores per measurement, and lazily built
/// posterior densities. Shared across every hypothesis referencing the
/// density.
struct TrackUpdateData {
    const ModeMixture* prior = nullptr;
    std::vector<std::vector<UpdateCache>> caches;     // [mode][component]
    std::vector<double> det_log_psi;                  // per measurement
    std::vector<TrackDensityPtr> posterior;           // per measurement, lazy

    void build(const ModeMixture& track, const JmsModel& model,
               const std::vector<Vec>& zs, const TruncationPolicy& policy,
               double log_pd, double log_kappa) {
        prior = &track;
        const auto& sensor = model.sensor;
        const auto ut = model.ut_params();
        StateMap h;
        if (!sensor.linear()) h = sensor.measurement_map();
        caches.resize(track.num_modes());
        for (int r = 0; r < track.num_modes(); ++r) {
            for (const auto& comp : track.per_mode[r].components) {
                caches[r].push_back(
                    sensor.linear()
                        ? kalman_update_cache(comp, sensor.H, sensor.R)
                        : ukf_update_cache(comp, h, sensor.R, ut,
                                           sensor.angle_dims()));
            }
        }
        det_log_psi.assign(zs.size(), neg_inf);
        posterior.resize(zs.size());
        for (std::size_t j = 0; j < zs.size(); ++j) {
            std::vector<double> terms;
            for (int r = 0; r < track.num_modes(); ++r) {
                const auto& comps = track.per_mode[r].components;
                for (std::size_t c = 0; c < comps.size(); ++c) {
                    double ll = caches[r][c].log_likelihood(zs[j]);
                    if (policy.gate &&
                        2.0 * (caches[r][c].log_norm - ll) > policy.gate_threshold)
                        continue;
                    terms.push_back(comps[c].log_weight + ll);
                }
            }
            double lse = log_sum_exp(terms);
            if (lse != neg_inf) det_log_psi[j] = log_pd + lse - log_kappa;
        }
    }

    TrackDensityPtr posterior_for(std::size_t j, const Vec& z,
                                  const TruncationPolicy& policy,
                                  double log_pd, double log_kappa) {
        if (posterior[j]) return posterior[j];
        auto updated = std::make_shared<ModeMixture>();
        updated->per_mode.resize(prior->num_modes());
        for (int r = 0; r < prior->num_modes(); ++r) {
            const auto& comps = prior->per_mode[r].components;
            for (std::size_t c = 0; c < comps.size(); ++c) {
                const auto& cache = caches[r][c];
                double ll = cache.log_likelihood(z);
                if (policy.gate &&
                    2.0 * (cache.log_norm - ll) > policy.gate_threshold)
                    continue;
                GaussianComponent upd;
                upd.log_weight = comps[c].log_weight + log_pd + ll - log_kappa;
                upd.mean = cache.posterior_mean(z);
                upd.cov = cache.post_cov;
                updated->per_mode[r].components.push_back(std::move(upd));
            }
        }
        updated->normalize();
        manage_track_mixtures(*updated, policy);
        posterior[j] = updated;
        return updated;
    }
};

std::uint64_t advance_history(std::uint64_t parent, int scan_time,
                              const std::vector<int>& row_to_col, int num_meas) {
    std::uint64_t h = hash_combine(parent, static_cast<std::uint64_t>(scan_time) + 1);
    for (std::size_t i = 0; i < row_to_col.size(); ++i) {
        int col = row_to_col[i];
        std::uint64_t code = col < num_meas ? static_cast<std::uint64_t>(col) + 1 : 0;
        h = hash_combine(h, code * 2654435761ULL + i);
    }
    return h;
}

}  // namespace

GlmbDensity update(const GlmbDensity& pred, const ScanSet& scan,
                   const JmsModel& model, const TruncationPolicy& policy,
                   int* ignored_measurements) {
    if (policy.max_hypotheses <= 0)
        throw ConfigError("update: max_hypotheses must be positive");

    const auto& sensor = model.sensor;
    std::vector<Vec> zs;
    int ignored = 0;
    for (const auto& z : scan.measurements) {
        if (sensor.in_region(z))
            zs.push_back(z);
        else
            ++ignored;
    }
    if (ignored_measurements) *ignored_measurements = ignored;
    const int m = static_cast<int>(zs.size());

    const double pd = sensor.detection_prob;
    const double log_pd = pd > 0.0 ? std::log(pd) : neg_inf;
    const double log_qd = pd < 1.0 ? std::log1p(-pd) : neg_inf;
    const double log_kappa = sensor.log_clutter_density();

    std::unordered_map<const ModeMixture*, TrackUpdateData> track_data;
    auto data_for = [&](const TrackDensityPtr& track) -> TrackUpdateData& {
        auto [it, inserted] = track_data.try_emplace(track.get());
        if (inserted)
            it->second.build(*track, model, zs, policy, log_pd, log_kappa);
        return it->second;
    };

    GlmbDensity out;
    out.time_index = pred.time_index;

    const bool unbounded =
        policy.max_hypotheses == std::numeric_limits<int>::max();

    for (const auto& parent : pred.hypotheses) {
        const int n = parent.cardinality();
        Mat costs = Mat::Constant(n, m + n, pos_inf);
        std::vector<TrackUpdateData*> rows(n);
        for (int i = 0; i < n; ++i) {
            auto& data = data_for(parent.tracks[i]);
            rows[i] = &data;
            if (log_pd != neg_inf)
                for (int j = 0; j < m; ++j)
                    if (data.det_log_psi[j] != neg_inf)
                        costs(i, j) = -data.det_log_psi[j];
            if (log_qd != neg_inf) costs(i, m + i) = -log_qd;
        }

        int k_req;
        if (unbounded) {
            k_req = std::numeric_limits<int>::max();
        } else {
            double w = std::exp(parent.log_weight);
            k_req = std::max(1, static_cast<int>(
                                    std::ceil(policy.max_hypotheses * w)));
        }

        for (const auto& assign : k_best(costs, k_req)) {
            GlmbHypothesis child;
            child.labels = parent.labels;
            child.log_weight = parent.log_weight - assign.total_cost;
            child.assoc_history =
                advance_history(parent.assoc_history, scan.time,
                                assign.row_to_col, m);
            child.tracks.reserve(n);
            for (int i = 0; i < n; ++i) {
                int col = assign.row_to_col[i];
                if (col < m)
                    child.tracks.push_back(rows[i]->posterior_for(
                        col, zs[col], policy, log_pd, log_kappa));
                else
                    child.tracks.push_back(parent.tracks[i]);  // miss: constant
                                                               // P_D leaves the
                                                               // density intact
            }
            out.hypotheses.push_back(std::move(child));
        }
    }

    out.normalize();
    return out;
}

namespace {

bool hypothesis_tiebreak(const GlmbHypothesis& a, const GlmbHypothesis& b) {
    if (a.labels != b.labels) return a.labels < b.labels;
    return a.assoc_history < b.assoc_history;
}

}  // namespace

GlmbDensity truncate(const GlmbDensity& density, const TruncationPolicy& policy) {
    GlmbDensity out;
    out.time_index = density.time_index;
    out.hypotheses = density.hypotheses;
    std::stable_sort(out.hypotheses.begin(), out.hypotheses.end(),
                     [](const GlmbHypothesis& a, const GlmbHypothesis& b) {
                         if (a.log_weight != b.log_weight)
                             return a.log_weight > b.log_weight;
                         return hypothesis_tiebreak(a, b);
                     });
    if (!out.hypotheses.empty() && policy.min_log_weight != neg_inf) {
        double best = out.hypotheses.front().log_weight;
        std::erase_if(out.hypotheses, [&](const GlmbHypothesis& h) {
            return h.log_weight < best + policy.min_log_weight;
        });
    }
    if (static_cast<int>(out.hypotheses.size()) > policy.max_hypotheses)
        out.hypotheses.resize(policy.max_hypotheses);
    out.normalize();
    return out;
}

std::vector<double> cardinality_distribution(const GlmbDensity& density) {
    int max_n = 0;
    for (const auto& h : density.hypotheses)
        max_n = std::max(max_n, h.cardinality());
    std::vector<std::vector<double>> buckets(max_n + 1);
    for (const auto& h : density.hypotheses)
        buckets[h.cardinality()].push_back(h.log_weight);
    std::vector<double> rho(max_n + 1, 0.0);
    for (int nn = 0; nn <= max_n; ++nn) {
        double lse = log_sum_exp(buckets[nn]);
        rho[nn] = lse == neg_inf ? 0.0 : std::exp(lse);
    }
    return rho;
}

MultiTargetEstimate extract(const GlmbDensity& density) {
    MultiTargetEstimate est;
    if (density.hypotheses.empty()) return est;

    auto rho = cardinality_distribution(density);
    int n_star = 0;
    for (std::size_t nn = 0; nn < rho.size(); ++nn)
        if (rho[nn] > rho[n_star]) n_star = static_cast<int>(nn);
    est.cardinality = n_star;

    const GlmbHypothesis* best = nullptr;
    for (const auto& h : density.hypotheses) {
        if (h.cardinality() != n_star) continue;
        if (!best || h.log_weight > best->log_weight ||
            (h.log_weight == best->log_weight && hypothesis_tiebreak(h, *best)))
            best = &h;
    }
    if (!best) return est;
    est.source_hypothesis = best->assoc_history;

    for (int i = 0; i < best->cardinality(); ++i) {
        const auto& track = best->track(i);
        TargetEstimate t;
        t.label = best->labels[i];
        t.mode_probs = track.mode_probabilities();
        t.mode = 0;
        for (int r = 1; r < track.num_modes(); ++r)
            if (t.mode_probs(r) > t.mode_probs(t.mode)) t.mode = r;
        track.moments(t.mean, t.cov);
        t.mode_means.reserve(track.num_modes());
        for (int r = 0; r < track.num_modes(); ++r)
            t.mode_means.push_back(track.mode_conditioned_mean(r));
        est.targets.push_back(std::move(t));
    }
    return est;
}

FilterStepResult filter_step(const GlmbDensity& prior, const ScanSet& scan,
                             const JmsModel& model, const TruncationPolicy& policy,
                             int k) {
    FilterStepResult result;
    GlmbDensity predicted = predict(prior, model, k, &policy);
    predicted = truncate(predicted, policy);
    result.posterior = update(predicted, scan, model, policy,
                              &result.diagnostics.ignored_measurements);
    result.posterior = truncate(result.posterior, policy);
    result.estimate = extract(result.posterior);

    auto& diag = result.diagnostics;
    diag.num_hypotheses = static_cast<int>(result.posterior.hypotheses.size());
    double entropy = 0.0;
    for (const auto& h : result.posterior.hypotheses) {
        double w = std::exp(h.log_weight);
        if (w > 0.0) entropy -= w * h.log_weight;
        for (const auto& t : h.tracks)
            for (const auto& mix : t->per_mode)
                diag.total_components += static_cast<int>(mix.components.size());
    }
    diag.eff_num_hypotheses = std::exp(entropy);
    return result;
}

std::string density_snapshot_json(const GlmbDensity& density) {
    nlohmann::json doc;
    doc["time_index"] = density.time_index;
    auto& hyps = doc["hypotheses"] = nlohmann::json::array();
    for (const auto& h : density.hypotheses) {
        nlohmann::json jh;
        jh["log_weight"] = h.log_weight;
        jh["assoc_history"] = h.assoc_history;
        auto& tracks = jh["tracks"] = nlohmann::json::array();
        for (int i = 0; i < h.cardinality(); ++i) {
            nlohmann::json jt;
            jt["label"] = {h.labels[i].birth_time, h.labels[i].birth_index};
            auto& modes = jt["modes"] = nlohmann::json::array();
            for (const auto& mix : h.track(i).per_mode) {
                nlohmann::json jm = nlohmann::json::array();
                for (const auto& c : mix.components) {
                    nlohmann::json jc;
                    jc["log_weight"] = c.log_weight;
                    jc["mean"] = std::vector<double>(
                        c.mean.data(), c.mean.data() + c.mean.size());
                    std::vector<std::vector<double>> cov(c.cov.rows());
                    for (int rr = 0; rr < c.cov.rows(); ++rr)
                        cov[rr].assign(c.cov.row(rr).begin(), c.cov.row(rr).end());
                    jc["cov"] = cov;
                    jm.push_back(std::move(jc));
                }
                modes.push_back(std::move(jm));
            }
            tracks.push_back(std::move(jt));
        }
        hyps.push_back(std::move(jh));
    }
    return doc.dump(2);
}

}  // namespace glmb
