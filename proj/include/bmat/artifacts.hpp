#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bmat/diagnostics.hpp"
#include "bmat/likelihood.hpp"
#include "bmat/sampler.hpp"

namespace bmat {

// Named free coordinates of a state. Distortions after the first step are implied by the
// innovations and are not listed.
std::vector<std::pair<std::string, double>> state_parameters(const ModelState& s, const ModelData& data);

// Long format: chain, iteration, parameter, value.
void write_samples(const std::filesystem::path& path, const PosteriorSamples& samples, const ModelData& data);
PosteriorSamples read_samples(const std::filesystem::path& path, const ModelData& data);

// R-hat / ESS rows for the monitored parameters plus per-chain acceptance rates and scales.
void write_diagnostics(const std::filesystem::path& path, const std::vector<DiagnosticRow>& rows,
                       const PosteriorSamples& samples);

}  // namespace bmat
