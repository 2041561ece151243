#include "glmb/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace glmb {

using nlohmann::json;

namespace {

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat mat_from_json(const json& j, const std::string& key) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ConfigError("config key '" + key + "': expected a matrix");
    Mat m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != j[0].size())
            throw ConfigError("config key '" + key + "': ragged matrix");
        for (std::size_t c = 0; c < j[i].size(); ++c)
            m(i, c) = j[i][c].get<double>();
    }
    return m;
}

json vec_to_json(const Vec& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vec vec_from_json(const json& j, const std::string& key) {
    if (!j.is_array())
        throw ConfigError("config key '" + key + "': expected an array");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "': wrong type");
    }
}

}  // namespace

std::string scenario_to_json_string(const JmsModel& model) {
    json doc;
    doc["sampling_interval"] = model.sampling_interval;
    doc["survival_prob"] = model.survival_prob;
    json models = json::array();
    for (const auto& m : model.models) {
        json jm;
        jm["kind"] = m.kind;
        if (m.linear()) jm["F"] = mat_to_json(m.F);
        jm["Q"] = mat_to_json(m.Q);
        jm["state_dim"] = m.state_dim;
        models.push_back(std::move(jm));
    }
    doc["models"] = std::move(models);
    doc["switching"] = mat_to_json(model.switching.probs);
    json sensor;
    sensor["kind"] = model.sensor.kind;
    if (model.sensor.linear()) sensor["H"] = mat_to_json(model.sensor.H);
    sensor["R"] = mat_to_json(model.sensor.R);
    sensor["detection_prob"] = model.sensor.detection_prob;
    sensor["clutter_rate"] = model.sensor.clutter_rate;
    sensor["region"] = mat_to_json(model.sensor.region);
    sensor["measurement_dim"] = model.sensor.measurement_dim;
    doc["sensor"] = std::move(sensor);
    json birth = json::array();
    for (const auto& site : model.birth.sites) {
        json js;
        js["existence_prob"] = site.existence_prob;
        js["mean"] = vec_to_json(site.mean);
        js["cov"] = mat_to_json(site.cov);
        js["mode_prior"] = vec_to_json(site.mode_prior);
        birth.push_back(std::move(js));
    }
    doc["birth"] = std::move(birth);
    return doc.dump(2);
}

namespace {

JmsModel scenario_from_json(const json& doc) {
    JmsModel model;
    model.sampling_interval = get_or(doc, "sampling_interval", 5.0);
    model.survival_prob = get_or(doc, "survival_prob", 0.99);
    if (!doc.contains("models"))
        throw ConfigError("config key 'models': missing");
    for (const auto& jm : doc.at("models")) {
        MotionModel m;
        m.kind = get_or<std::string>(jm, "kind", "linear");
        if (m.kind == "linear") m.F = mat_from_json(jm.at("F"), "models.F");
        m.Q = mat_from_json(jm.at("Q"), "models.Q");
        m.state_dim = get_or(jm, "state_dim", static_cast<int>(m.Q.rows()));
        model.models.push_back(std::move(m));
    }
    model.switching.probs = mat_from_json(doc.at("switching"), "switching");
    const auto& js = doc.at("sensor");
    model.sensor.kind = get_or<std::string>(js, "kind", "linear");
    if (model.sensor.kind == "linear")
        model.sensor.H = mat_from_json(js.at("H"), "sensor.H");
    model.sensor.R = mat_from_json(js.at("R"), "sensor.R");
    model.sensor.detection_prob = get_or(js, "detection_prob", 0.97);
    model.sensor.clutter_rate = get_or(js, "clutter_rate", 60.0);
    model.sensor.region = mat_from_json(js.at("region"), "sensor.region");
    model.sensor.measurement_dim =
        get_or(js, "measurement_dim", static_cast<int>(model.sensor.R.rows()));
    for (const auto& jb : doc.at("birth")) {
        BirthSite site;
        site.existence_prob = get_or(jb, "existence_prob", 0.0);
        site.mean = vec_from_json(jb.at("mean"), "birth.mean");
        site.cov = mat_from_json(jb.at("cov"), "birth.cov");
        site.mode_prior = vec_from_json(jb.at("mode_prior"), "birth.mode_prior");
        model.birth.sites.push_back(std::move(site));
    }
    model.validate();
    return model;
}

}  // namespace

JmsModel scenario_from_json_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario parse error: ") + e.what());
    }
    return scenario_from_json(doc);
}

void save_scenario(const JmsModel& model, const std::string& path) {
    write_text_file(path, scenario_to_json_string(model));
}

JmsModel load_scenario(const std::string& path) {
    return scenario_from_json_string(read_text_file(path));
}

std::string script_to_json_string(const ScenarioScript& script) {
    json doc;
    doc["steps"] = script.steps;
    doc["rng_seed"] = script.rng_seed;
    doc["process_noise_scale"] = script.process_noise_scale;
    json births = json::array();
    for (const auto& b : script.births) {
        json jb;
        jb["step"] = b.step;
        jb["site"] = b.site;
        if (b.initial_state.size() > 0)
            jb["initial_state"] = vec_to_json(b.initial_state);
        if (!b.mode_schedule.empty()) jb["mode_schedule"] = b.mode_schedule;
        if (b.death_step > 0) jb["death_step"] = b.death_step;
        births.push_back(std::move(jb));
    }
    doc["births"] = std::move(births);
    return doc.dump(2);
}

ScenarioScript script_from_json_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("script parse error: ") + e.what());
    }
    ScenarioScript script;
    script.steps = get_or(doc, "steps", 100);
    script.rng_seed = get_or<std::uint64_t>(doc, "rng_seed", 0);
    script.process_noise_scale = get_or(doc, "process_noise_scale", 1.0);
    if (doc.contains("births")) {
        for (const auto& jb : doc.at("births")) {
            BirthSpec b;
            b.step = get_or(jb, "step", 1);
            b.site = get_or(jb, "site", 0);
            if (jb.contains("initial_state"))
                b.initial_state =
                    vec_from_json(jb.at("initial_state"), "births.initial_state");
            b.mode_schedule =
                get_or(jb, "mode_schedule", std::vector<int>{});
            b.death_step = get_or(jb, "death_step", 0);
            script.births.push_back(std::move(b));
        }
    }
    return script;
}

void resolve_scenario(const std::string& name, JmsModel& model,
                      ScenarioScript& script, std::uint64_t seed) {
    if (name == "linear") {
        model = linear_scenario();
        script = default_linear_script(seed);
    } else if (name == "nonlinear") {
        model = nonlinear_scenario();
        script = default_nonlinear_script(seed);
    } else {
        model = load_scenario(name);
        script = model.state_dim() == 4 ? default_linear_script(seed)
                                        : default_nonlinear_script(seed);
    }
}

RunConfig run_config_from_json_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig cfg;
    cfg.scenario_name = get_or<std::string>(doc, "scenario", "linear");
    cfg.runs = get_or(doc, "runs", 1);
    if (cfg.runs < 1) throw ConfigError("config key 'runs': must be >= 1");
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
    cfg.output_dir = get_or<std::string>(doc, "output_dir", "out");
    cfg.threads = get_or(doc, "threads", 1);
    cfg.verbose = get_or(doc, "verbose", false);
    if (doc.contains("policy")) {
        const auto& jp = doc.at("policy");
        cfg.policy.max_hypotheses = get_or(jp, "max_hypotheses", 1000);
        cfg.policy.min_log_weight = get_or(jp, "min_log_weight", -15.0);
        cfg.policy.prune_thresh = get_or(jp, "prune_thresh", 1e-5);
        cfg.policy.merge_thresh = get_or(jp, "merge_thresh", 4.0);
        cfg.policy.max_components = get_or(jp, "max_components", 10);
        cfg.policy.gate = get_or(jp, "gate", false);
        cfg.policy.gate_threshold = get_or(jp, "gate_threshold", 36.0);
    }
    if (doc.contains("ospa")) {
        const auto& jo = doc.at("ospa");
        cfg.ospa_params.cutoff = get_or(jo, "cutoff", 200.0);
        cfg.ospa_params.order = get_or(jo, "order", 2.0);
        cfg.ospa_params.validate();
    }
    if (doc.contains("emit")) {
        const auto& je = doc.at("emit");
        cfg.emit.estimates = get_or(je, "estimates", true);
        cfg.emit.ospa = get_or(je, "ospa", true);
        cfg.emit.modes = get_or(je, "modes", true);
        cfg.emit.density_snapshots = get_or(je, "density_snapshots", false);
    }
    resolve_scenario(cfg.scenario_name, cfg.model, cfg.script, cfg.seed);
    if (doc.contains("scenario_overrides")) {
        // apply numeric overrides on top of the preset
        const auto& jo = doc.at("scenario_overrides");
        cfg.model.survival_prob =
            get_or(jo, "survival_prob", cfg.model.survival_prob);
        cfg.model.sensor.detection_prob =
            get_or(jo, "detection_prob", cfg.model.sensor.detection_prob);
        cfg.model.sensor.clutter_rate =
            get_or(jo, "clutter_rate", cfg.model.sensor.clutter_rate);
        cfg.model.validate();
    }
    if (doc.contains("script"))
        cfg.script = script_from_json_string(doc.at("script").dump());
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json_string(read_text_file(path));
}

std::string scans_to_json_string(const std::vector<ScanSet>& scans) {
    json doc = json::array();
    for (const auto& s : scans) {
        json js;
        js["k"] = s.time;
        json ms = json::array();
        for (const auto& z : s.measurements) ms.push_back(vec_to_json(z));
        js["measurements"] = std::move(ms);
        doc.push_back(std::move(js));
    }
    return doc.dump();
}

std::vector<ScanSet> scans_from_json_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scan log parse error: ") + e.what());
    }
    if (!doc.is_array()) throw ConfigError("scan log: expected a JSON array");
    std::vector<ScanSet> scans;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& js = doc[i];
        if (!js.is_object() || !js.contains("k") || !js.contains("measurements"))
            throw ConfigError("scan log record " + std::to_string(i) +
                              ": expected {k, measurements}");
        ScanSet s;
        s.time = js.at("k").get<int>();
        for (const auto& jz : js.at("measurements")) {
            if (!jz.is_array())
                throw ConfigError("scan log record " + std::to_string(i) +
                                  ": measurement is not an array");
            s.measurements.push_back(vec_from_json(jz, "measurements"));
        }
        scans.push_back(std::move(s));
    }
    return scans;
}

void save_scans(const std::vector<ScanSet>& scans, const std::string& path) {
    write_text_file(path, scans_to_json_string(scans));
}

std::vector<ScanSet> load_scans(const std::string& path) {
    return scans_from_json_string(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << text;
}

}  // namespace glmb
