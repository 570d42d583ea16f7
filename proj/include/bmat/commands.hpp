#pragma once

#include "bmat/config.hpp"

namespace bmat {

// Each command reads its inputs from the config paths / output directory and writes its
// artifacts into cfg.output_dir. Errors propagate as InputError / NumericalError.
void cmd_ingest(const RunConfig& cfg);
void cmd_preprocess(const RunConfig& cfg);
void cmd_fit(const RunConfig& cfg);
void cmd_summarize(const RunConfig& cfg);
void cmd_validate(const RunConfig& cfg);
void cmd_simulate(const RunConfig& cfg);
void cmd_sbc(const RunConfig& cfg);

// Likelihood inputs rebuilt from model_input.csv and the envelope file.
ModelData load_model_data(const RunConfig& cfg);

}  // namespace bmat
