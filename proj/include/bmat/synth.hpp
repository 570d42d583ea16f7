#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bmat/envelope.hpp"
#include "bmat/likelihood.hpp"
#include "bmat/model_data.hpp"
#include "bmat/types.hpp"
#include "bmat/vr_preprocess.hpp"

namespace bmat {

// Parameter profile with proper, moderately tight priors on the regression and hierarchy;
// used for synthetic truth and calibration fits.
PriorConfig calibration_prior();

// Fixed values for selected true parameters; anything unset is drawn from the prior.
struct TruthOverrides {
    std::optional<double> alpha_world, sigma_country, sigma_region;
    std::optional<double> beta_1, beta_2, beta_3;
    std::optional<double> phi, theta, sqrt_gamma0, sigma_lambda;
    std::optional<double> sigma_dhs, sigma_notdhs;
};

struct SynthConfig {
    int n_countries = 5;
    int n_regions = 2;
    int n_empty = 0;  // trailing countries with no observations
    int first_year = 1985;
    int last_year = 2015;
    int anchor_year = 1990;
    // Every vr_every-th country (starting with the first) reports yearly VR over
    // [vr_first_year, last_year]; the others get specialized and survey data.
    int vr_every = 2;
    int vr_first_year = 1990;
    int specialized_per_country = 2;
    int dhs_per_country = 2;
    int misc_per_country = 1;
    double specialized_error = 0.1;
    double dhs_sampling_error = 0.1;
    double misc_sampling_error = 0.3;
    double vr_error = 0.1;  // exact mode
    // In exact mode every observation (VR included) follows the log-normal data model and
    // the generator assigns VR adjustment priors itself; otherwise VR deaths are binomial.
    bool exact = false;
    double vr_point_mass = 0.5;  // exact mode: Pr(gamma = g) for VR slots
    double vr_g = 1.3;
    double vr_g_upper = 1.8;
    bool zero_noise = false;
    bool flat_distortion = false;
    bool with_aids = true;
    PriorConfig prior = calibration_prior();
    TruthOverrides truth;
    int max_attempts = 1000;

    void validate() const;
};

struct SyntheticWorld {
    EnvelopeTable envelopes;
    EstimationWindow window;
    ModelData data;  // exact mode: likelihood inputs built from `processed`
    ModelState truth;
    std::vector<std::vector<double>> true_mmr;  // [country][year], per birth
    std::vector<RawRecord> records;             // counts mode
    std::vector<std::string> provenance;        // one per record / processed observation
    std::vector<ProcessedObservation> processed;  // exact mode
};

SyntheticWorld generate_world(const SynthConfig& cfg, std::uint64_t seed);

// observations.csv, envelopes.csv, truth.csv, truth_mmr.csv, provenance.csv
void write_world(const std::filesystem::path& dir, const SyntheticWorld& world);

}  // namespace bmat
