#include "bmat/commands.hpp"

#include <iostream>

#include "bmat/artifacts.hpp"
#include "bmat/errors.hpp"
#include "bmat/ingest.hpp"
#include "bmat/posterior.hpp"

namespace bmat {

namespace {

std::filesystem::path out_file(const RunConfig& cfg, const char* name) {
    std::filesystem::create_directories(cfg.output_dir);
    return cfg.output_dir / name;
}

void require_file(const std::filesystem::path& path, const std::string& what) {
    if (!std::filesystem::exists(path)) throw InputError("missing " + what + " artifact: " + path.string());
}

void require_input(const std::filesystem::path& path, const char* key) {
    if (path.empty()) throw InputError(std::string("config key ") + key + " is not set");
    if (!std::filesystem::exists(path)) throw InputError("input file not found: " + path.string());
}

std::vector<PanelCell> panel_for(const RunConfig& cfg, const ModelData& data) {
    return cfg.panel.empty() ? default_panel(data, cfg.panel_year) : cfg.panel;
}

}  // namespace

ModelData load_model_data(const RunConfig& cfg) {
    auto input = cfg.output_dir / "model_input.csv";
    require_file(input, "preprocess");
    require_input(cfg.envelopes, "paths.envelopes");
    auto env = read_envelopes(cfg.envelopes);
    return build_model_data(read_model_input(input), env, cfg.window, cfg.aids);
}

void cmd_ingest(const RunConfig& cfg) {
    require_input(cfg.observations, "paths.observations");
    require_input(cfg.envelopes, "paths.envelopes");
    Database db = load_database(cfg.observations, cfg.envelopes);
    IngestResult res = derive_observations(db);
    write_observations(out_file(cfg, "observations_accepted.csv"), res.observations);
    write_rejections(out_file(cfg, "rejections.csv"), res.rejections);
    std::cerr << "ingest: " << res.observations.size() << " accepted, " << res.rejections.size() << " rejected\n";
}

void cmd_preprocess(const RunConfig& cfg) {
    auto accepted = cfg.output_dir / "observations_accepted.csv";
    require_file(accepted, "ingest");
    require_input(cfg.envelopes, "paths.envelopes");
    auto env = read_envelopes(cfg.envelopes);
    auto res = preprocess(read_observations(accepted), env, cfg.preprocess);
    write_preprocess_report(out_file(cfg, "preprocess_report.csv"), res.report);
    write_model_input(out_file(cfg, "model_input.csv"), res.observations);
    std::cerr << "preprocess: " << res.observations.size() << " model observations\n";
}

void cmd_fit(const RunConfig& cfg) {
    ModelData data = load_model_data(cfg);
    Posterior post(data, cfg.prior);
    PosteriorSamples samples = run_chains(cfg.sampler, post);
    write_samples(out_file(cfg, "samples.csv"), samples, data);
    auto rows = diagnose(monitored_traces(samples, data, panel_for(cfg, data)));
    write_diagnostics(out_file(cfg, "diagnostics.csv"), rows, samples);
    std::cerr << "fit: " << samples.total() << " retained states\n";
}

void cmd_summarize(const RunConfig& cfg) {
    ModelData data = load_model_data(cfg);
    auto samples_path = cfg.output_dir / "samples.csv";
    require_file(samples_path, "fit");
    PosteriorSamples samples = read_samples(samples_path, data);
    auto states = samples.pooled();
    write_estimates(out_file(cfg, "estimates.csv"), summarize(states, data));
    write_observation_intervals(out_file(cfg, "observation_intervals.csv"), observation_intervals(states, data));
}

void cmd_validate(const RunConfig& cfg) {
    ModelData data = load_model_data(cfg);
    std::vector<ExerciseResult> results;
    if (cfg.exercise == "1" || cfg.exercise == "both") {
        results.push_back(run_exercise(Exercise::random_20pct, data, cfg.prior, cfg.sampler, cfg.validation, nullptr));
    }
    if (cfg.exercise == "2" || cfg.exercise == "both") {
        Posterior post(data, cfg.prior);
        PosteriorSamples full = run_chains(cfg.sampler, post);
        results.push_back(run_exercise(Exercise::after_2007, data, cfg.prior, cfg.sampler, cfg.validation, &full));
    }
    std::vector<ValidationReport> reports;
    for (const auto& r : results) reports.push_back(r.report);
    write_validation_report(out_file(cfg, "validation_report.csv"), reports);
    write_validation_observations(out_file(cfg, "validation_observations.csv"), results);
    write_validation_estimates(out_file(cfg, "validation_estimates.csv"), results);
}

void cmd_simulate(const RunConfig& cfg) {
    auto world = generate_world(cfg.synth, cfg.synth_seed);
    write_world(cfg.output_dir, world);
    std::cerr << "simulate: " << world.records.size() << " records for " << world.data.countries.size()
              << " countries\n";
}

void cmd_sbc(const RunConfig& cfg) {
    auto report = sbc_run(cfg.sbc);
    write_sbc(cfg.output_dir, report);
    std::cerr << "sbc: " << report.converged << "/" << report.replications.size() << " converged, coverage "
              << report.coverage << "\n";
}

}  // namespace bmat
