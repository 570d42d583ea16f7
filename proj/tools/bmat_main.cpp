#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bmat/commands.hpp"
#include "bmat/errors.hpp"

namespace {

void report_error(const std::string& command, const std::string& kind, const std::string& message,
                  const std::filesystem::path& out_dir) {
    nlohmann::json record = {{"command", command}, {"kind", kind}, {"message", message}};
    std::cerr << record.dump() << "\n";
    if (out_dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream out(out_dir / "error.json", std::ios::binary);
    if (out) out << record.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian maternal mortality estimation"};
    app.require_subcommand(1);
    std::string config_path;
    long seed = -1;
    std::string out_dir;
    std::string exercise;
    app.add_option("--config", config_path, "configuration file (flat key = value lines)");
    app.add_option("--seed", seed, "master seed for sampling, simulation and calibration")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--exercise", exercise, "validation exercise")->check(CLI::IsMember({"1", "2", "both"}));

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"ingest", "parse observations and envelopes, derive PM values"},
        {"preprocess", "VR classification, adjustments and error terms"},
        {"fit", "run the MCMC sampler"},
        {"summarize", "posterior estimates and observation intervals"},
        {"validate", "out-of-sample validation exercises"},
        {"simulate", "write a synthetic world"},
        {"sbc", "simulation-based calibration"},
    };
    app.fallthrough();
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    std::filesystem::path resolved_out;
    try {
        bmat::RunConfig cfg = config_path.empty() ? bmat::parse_config("") : bmat::load_config(config_path);
        if (const char* env = std::getenv("BMAT_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        resolved_out = cfg.output_dir;
        if (seed >= 0) {
            auto s = static_cast<std::uint64_t>(seed);
            cfg.sampler.seed = s;
            cfg.synth_seed = s;
            cfg.sbc.seed = s;
            cfg.sbc.sampler.seed = s;
        }
        if (!exercise.empty()) cfg.exercise = exercise;
        cfg.validate();

        if (command == "ingest") bmat::cmd_ingest(cfg);
        else if (command == "preprocess") bmat::cmd_preprocess(cfg);
        else if (command == "fit") bmat::cmd_fit(cfg);
        else if (command == "summarize") bmat::cmd_summarize(cfg);
        else if (command == "validate") bmat::cmd_validate(cfg);
        else if (command == "simulate") bmat::cmd_simulate(cfg);
        else if (command == "sbc") bmat::cmd_sbc(cfg);
    } catch (const bmat::NumericalError& e) {
        report_error(command, "numerical", e.what(), resolved_out);
        return 3;
    } catch (const bmat::InputError& e) {
        report_error(command, "input", e.what(), resolved_out);
        return 2;
    } catch (const std::exception& e) {
        report_error(command, "input", e.what(), resolved_out);
        return 2;
    }
    return 0;
}
