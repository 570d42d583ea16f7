#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bmat/likelihood.hpp"
#include "bmat/posterior.hpp"
#include "bmat/sampler.hpp"
#include "bmat/vr_preprocess.hpp"

namespace bmat {

struct Split {
    std::vector<ProcessedObservation> training;
    std::vector<ProcessedObservation> test;
};

// Uniform without-replacement draw of round(fraction * n) test observations; both parts
// keep the input order.
Split split_random(const std::vector<ProcessedObservation>& obs, double fraction, std::uint64_t seed);

// Test set: reference year >= cutoff.
Split split_recent(const std::vector<ProcessedObservation>& obs, double cutoff);

struct PredictiveSummary {
    double median = 0.0;
    double lower = 0.0;  // 10th percentile
    double upper = 0.0;  // 90th percentile
};

// Posterior predictive PM of each test observation: per retained state, the data-model
// mean plus log-normal noise. VR adjustments without a training counterpart are drawn from
// their spike-and-slab prior. Output aligned with `test`.
std::vector<PredictiveSummary> predictive_draws(const std::vector<const ModelState*>& states,
                                                const ModelData& training, const std::vector<ProcessedObservation>& test,
                                                std::uint64_t seed, int draws_per_state = 1);

enum class Exercise { random_20pct, after_2007 };
std::string_view to_string(Exercise e);

// One left-out observation with its prediction; errors on the MMR scale (per 100,000).
struct ObservationOutcome {
    std::size_t row = 0;
    std::string country;
    MdgGroup group = MdgGroup::developing;
    double ref_year = 0.0;
    double y = 0.0;
    double predicted = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double deaths = 0.0;
    double births = 0.0;
    bool used = true;  // exercise II keeps only the most recent per country

    double error() const;           // (y - predicted) * D / B * 1e5
    double relative_error() const;  // error / (predicted * D / B * 1e5) * 100
};

// Exercise II estimate comparison for one country at the evaluation year.
struct EstimateOutcome {
    std::string country;
    MdgGroup group = MdgGroup::developing;
    double full = 0.0;  // full-data posterior median MMR, per 100,000
    double training = 0.0;
    double training_q10 = 0.0;
    double training_q90 = 0.0;

    double error() const { return full - training; }
    double relative_error() const { return error() / full * 100.0; }
};

struct GroupMetrics {
    MdgGroup group = MdgGroup::developing;
    std::size_t n = 0;
    double me = 0, mae = 0, mre = 0, mare = 0;
    double pct_below = 0, pct_inside = 0, pct_above = 0;
    std::size_t n_countries = 0;
    std::optional<double> est_me, est_mae, est_mre, est_mare, est_pct_below, est_pct_above;
};

struct ValidationReport {
    Exercise exercise = Exercise::random_20pct;
    std::vector<GroupMetrics> groups;  // developed, developing
};

ValidationReport validation_metrics(Exercise exercise, const std::vector<ObservationOutcome>& observations,
                                    const std::vector<EstimateOutcome>& estimates);

// Flag all but the most recent left-out observation of each country as unused.
void keep_most_recent(std::vector<ObservationOutcome>& outcomes);

struct ValidationConfig {
    double fraction = 0.2;
    std::uint64_t split_seed = 2007;
    double cutoff = 2007.0;
    int estimate_year = 2007;
    std::uint64_t predictive_seed = 7;
};

struct ExerciseResult {
    ValidationReport report;
    std::vector<ObservationOutcome> observations;
    std::vector<EstimateOutcome> estimates;
};

// Refit on the training part and score the left-out part. Exercise II also compares the
// training fit with `full_fit` (the fit on all observations) at the evaluation year.
ExerciseResult run_exercise(Exercise exercise, const ModelData& full_data, const PriorConfig& prior,
                            const SamplerConfig& sampler, const ValidationConfig& cfg,
                            const PosteriorSamples* full_fit);

void write_validation_report(const std::filesystem::path& path, const std::vector<ValidationReport>& reports);
void write_validation_observations(const std::filesystem::path& path, const std::vector<ExerciseResult>& results);
void write_validation_estimates(const std::filesystem::path& path, const std::vector<ExerciseResult>& results);

}  // namespace bmat
