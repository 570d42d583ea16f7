#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bmat/sampler.hpp"
#include "bmat/synth.hpp"

namespace bmat {

struct SbcConfig {
    SynthConfig world;
    SamplerConfig sampler;
    int replications = 200;
    std::uint64_t seed = 1;
    int rank_draws = 99;  // posterior draws per rank; ranks take rank_draws + 1 values
    int bins = 10;
    int coverage_year = 2005;
    double rhat_threshold = 1.1;
    // Multiplies every observation error handed to the fitter; 1 is the correct model.
    double fit_sigma_scale = 1.0;
    int threads = 0;  // 0: hardware concurrency
};

// Parameters whose ranks are recorded.
const std::vector<std::string>& sbc_parameters();

struct SbcReplication {
    int index = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    double max_rhat = 0.0;
    std::map<std::string, int> ranks;
    int covered = 0;  // countries whose true MMR at coverage_year lies in the 80% interval
    int cells = 0;
};

struct SbcParameterSummary {
    std::string parameter;
    std::vector<int> histogram;
    std::optional<double> chi_square;
    std::optional<double> p_value;
};

struct SbcReport {
    SbcConfig config;
    std::vector<SbcReplication> replications;
    std::vector<SbcParameterSummary> parameters;
    int converged = 0;
    double coverage = 0.0;
};

SbcReplication sbc_replication(const SbcConfig& cfg, int index);
SbcReport sbc_run(const SbcConfig& cfg);
// Histograms and uniformity statistics from finished replications.
SbcReport sbc_assemble(const SbcConfig& cfg, std::vector<SbcReplication> reps);

void write_sbc(const std::filesystem::path& dir, const SbcReport& report);

}  // namespace bmat
