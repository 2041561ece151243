#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "glmb/runner.hpp"

namespace {

// GLMB_OUTPUT_DIR overrides any configured/flagged output directory.
void apply_output_override(std::string& output_dir) {
    if (const char* env = std::getenv("GLMB_OUTPUT_DIR"); env && *env)
        output_dir = env;
}

struct PolicyFlags {
    void attach(CLI::App* cmd, glmb::TruncationPolicy& policy) {
        cmd->add_option("--max-hypotheses", policy.max_hypotheses,
                        "Hypothesis cap per truncation")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--min-log-weight", policy.min_log_weight,
                        "Relative log-weight cutoff (negative)");
        cmd->add_option("--prune-threshold", policy.prune_thresh,
                        "Mixture component prune threshold");
        cmd->add_option("--merge-threshold", policy.merge_thresh,
                        "Mixture merge Mahalanobis^2 threshold");
        cmd->add_option("--max-components", policy.max_components,
                        "Mixture component cap per mode")
            ->check(CLI::PositiveNumber);
    }
};

int run_command(glmb::RunConfig cfg) {
    apply_output_override(cfg.output_dir);
    auto summary = glmb::run_monte_carlo(cfg);
    if (cfg.verbose) {
        double mean = 0.0;
        for (double v : summary.mean_ospa_total) mean += v;
        if (summary.steps > 0) mean /= summary.steps;
        std::cerr << "runs=" << summary.runs << " steps=" << summary.steps
                  << " mean_ospa=" << mean
                  << " elapsed=" << summary.elapsed_seconds << "s"
                  << " ignored=" << summary.total_ignored << "\n";
    }
    std::cout << "wrote " << cfg.output_dir << "/summary.csv (" << summary.runs
              << " runs, " << summary.steps << " steps)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized labeled multi-Bernoulli tracker for "
                 "jump-Markov maneuvering targets"};
    app.require_subcommand(1);

    // --- run ---
    auto* run = app.add_subcommand("run", "Simulate scenarios and run the filter");
    std::string scenario = "linear";
    std::string config_path, output_dir, script_path;
    int runs = -1, threads = -1;
    std::int64_t seed = -1;
    glmb::TruncationPolicy policy_flags_values;
    bool have_policy = false;
    bool verbose = false;
    bool no_estimates = false, no_ospa = false, no_modes = false;
    run->add_option("--scenario", scenario,
                    "Preset (linear | nonlinear) or scenario file path");
    run->add_option("--config", config_path, "Run configuration file (JSON)");
    run->add_option("--script", script_path, "Scenario script file (JSON)");
    run->add_option("--runs", runs, "Monte Carlo run count")
        ->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Base RNG seed");
    run->add_option("--output-dir", output_dir, "Output directory");
    run->add_option("--threads", threads, "Worker threads")
        ->check(CLI::PositiveNumber);
    run->add_flag("--verbose,-v", verbose, "Per-run progress to stderr");
    run->add_flag("--no-estimates", no_estimates, "Skip estimates.csv");
    run->add_flag("--no-ospa", no_ospa, "Skip ospa.csv");
    run->add_flag("--no-modes", no_modes, "Skip modes.csv");
    PolicyFlags policy_flags;
    policy_flags.attach(run, policy_flags_values);
    run->parse_complete_callback([&] { have_policy = true; });

    // --- replay ---
    auto* replay = app.add_subcommand("replay", "Filter recorded scans");
    std::string replay_scans_path, replay_model, replay_out = "out";
    glmb::TruncationPolicy replay_policy;
    replay->add_option("scans", replay_scans_path, "Scan log (JSON)")->required();
    replay
        ->add_option("--scenario", replay_model,
                     "Preset or scenario file providing the model")
        ->required();
    replay->add_option("--output-dir", replay_out, "Output directory");
    PolicyFlags replay_flags;
    replay_flags.attach(replay, replay_policy);

    // --- validate-config ---
    auto* validate = app.add_subcommand("validate-config",
                                        "Check a run configuration file");
    std::string validate_path;
    validate->add_option("config", validate_path, "Run configuration file (JSON)")
        ->required();

    // --- export-scenario ---
    auto* exporter = app.add_subcommand(
        "export-scenario", "Write a preset scenario definition to a file");
    std::string export_name = "linear", export_path, export_script_path;
    exporter->add_option("--scenario", export_name,
                         "Preset (linear | nonlinear) or scenario file");
    exporter->add_option("--output", export_path, "Scenario file to write")
        ->required();
    exporter->add_option("--script-output", export_script_path,
                         "Also write the default script here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            glmb::RunConfig cfg;
            if (!config_path.empty()) cfg = glmb::load_run_config(config_path);
            if (run->count("--scenario") || config_path.empty()) {
                cfg.scenario_name = scenario;
                glmb::resolve_scenario(scenario, cfg.model, cfg.script,
                                       cfg.seed);
            }
            if (!script_path.empty())
                cfg.script = glmb::script_from_json_string(
                    glmb::read_text_file(script_path));
            if (runs > 0) cfg.runs = runs;
            if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
            if (threads > 0) cfg.threads = threads;
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            if (have_policy) {
                auto apply = [&](const char* flag, auto member) {
                    if (run->count(flag))
                        cfg.policy.*member = policy_flags_values.*member;
                };
                apply("--max-hypotheses", &glmb::TruncationPolicy::max_hypotheses);
                apply("--min-log-weight", &glmb::TruncationPolicy::min_log_weight);
                apply("--prune-threshold", &glmb::TruncationPolicy::prune_thresh);
                apply("--merge-threshold", &glmb::TruncationPolicy::merge_thresh);
                apply("--max-components", &glmb::TruncationPolicy::max_components);
            }
            cfg.verbose = verbose;
            if (no_estimates) cfg.emit.estimates = false;
            if (no_ospa) cfg.emit.ospa = false;
            if (no_modes) cfg.emit.modes = false;
            return run_command(std::move(cfg));
        }

        if (replay->parsed()) {
            glmb::JmsModel model;
            glmb::ScenarioScript unused;
            glmb::resolve_scenario(replay_model, model, unused, 0);
            auto scans = glmb::load_scans(replay_scans_path);
            apply_output_override(replay_out);
            int ignored =
                glmb::replay_scans(scans, model, replay_policy, replay_out);
            std::cout << "wrote " << replay_out << "/estimates.csv ("
                      << scans.size() << " scans";
            if (ignored > 0)
                std::cout << ", " << ignored
                          << " out-of-region measurements ignored";
            std::cout << ")\n";
            if (ignored > 0)
                std::cerr << "warning: ignored " << ignored
                          << " out-of-region measurements\n";
            return 0;
        }

        if (validate->parsed()) {
            glmb::load_run_config(validate_path);
            std::cout << validate_path << ": ok\n";
            return 0;
        }

        if (exporter->parsed()) {
            glmb::JmsModel model;
            glmb::ScenarioScript script;
            glmb::resolve_scenario(export_name, model, script, 0);
            glmb::save_scenario(model, export_path);
            std::cout << "wrote " << export_path << "\n";
            if (!export_script_path.empty()) {
                glmb::write_text_file(export_script_path,
                                      glmb::script_to_json_string(script));
                std::cout << "wrote " << export_script_path << "\n";
            }
            return 0;
        }
    } catch (const glmb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const glmb::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
