#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bmat/diagnostics.hpp"
#include "bmat/epi.hpp"
#include "bmat/likelihood.hpp"
#include "bmat/model_data.hpp"
#include "bmat/sampler.hpp"
#include "bmat/sbc.hpp"
#include "bmat/synth.hpp"
#include "bmat/validation.hpp"
#include "bmat/vr_preprocess.hpp"

namespace bmat {

struct RunConfig {
    std::filesystem::path observations;
    std::filesystem::path envelopes;
    std::filesystem::path output_dir = "out";
    EstimationWindow window;
    AidsParams aids;
    PreprocessConfig preprocess;
    PriorConfig prior;
    SamplerConfig sampler;
    ValidationConfig validation;
    std::string exercise = "both";  // 1, 2 or both
    int panel_year = 2005;
    std::vector<PanelCell> panel;  // empty: every country at panel_year
    SynthConfig synth;
    std::uint64_t synth_seed = 1;
    SbcConfig sbc;

    void validate() const;
};

// Flat "section.key = value" lines; '#' starts a comment. Relative paths resolve against
// `base_dir`. Unknown keys are an InputError.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace bmat
