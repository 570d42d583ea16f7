#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bmat/envelope.hpp"
#include "bmat/types.hpp"

namespace bmat {

// min{1, d/D} * (1 - p_ill)
double usability(double vr_deaths, double envelope_deaths, double p_ill);

struct VrYear {
    int year = 0;
    double usability = 0.0;
    bool misc_registration = false;
};

// Type I: u > 0.8 inside a run of >= 3 observations with u > 0.6 where consecutive
// members are at most one missing calendar year apart. Type II: same run, 0.6 < u <= 0.8
// (or u > 0.8 but not qualifying as I, which cannot happen). Misc registration data is
// type III. Output is aligned with the input order.
std::vector<VrType> classify_vr(std::span<const VrYear> series);

struct ZeroMerge {
    std::size_t zero_row = 0;       // source row of the removed zero-death year
    std::size_t recipient_row = 0;  // source row of the observation that absorbed it
};

struct MergeOutcome {
    std::vector<Observation> series;
    std::vector<ZeroMerge> merges;
    bool all_zero = false;  // every observation had m = 0; series is empty
};

// Fold every m = 0 year into the nearest non-zero observation of the series (ties go to
// the earlier one): recipient keeps m, gains the zero year's d, its period grows to
// cover both, and its reference year becomes the death-weighted midpoint.
MergeOutcome merge_zero_years(std::vector<Observation> series);

// Initial misclassification multiplier g for every year in [first_year, last_year].
// Study years take their ratio, gaps are interpolated linearly, forward extrapolation is
// constant, backward extrapolation is constant unless the earliest ratio is below 1.5,
// in which case it rises linearly to 1.5 over 5 years. No ratios: 1.5 everywhere.
std::vector<double> build_adjustment_schedule(int first_year, int last_year, const std::map<int, double>& study_ratios);

constexpr double kDefaultAdjustment = 1.5;
constexpr double kMaxAdjustment = 3.0;

struct GammaEnvelope {
    double g_upper = 0.0;
    double point_mass = 1.0;  // Pr(gamma = g)
};

GammaEnvelope gamma_prior_envelope(double g, double usability, VrType type);

struct VrErrorConfig {
    int draws = 2000;
    double multiplier_sd = 0.25;  // sd of log gamma~ around log g
    double type1_cap = 0.5;
    double clamp = 1e-8;
};

// Monte-Carlo total error (log-PM sd) of a VR observation, including uncertainty in the
// misclassification multiplier. Type I results are capped at cfg.type1_cap.
double vr_total_error(double vr_deaths, double y, double g, VrType type, std::uint64_t seed,
                      const VrErrorConfig& cfg = {});

struct StudyExclusion {
    std::vector<Observation> kept;
    std::vector<Observation> dropped;
};

// Drop VR observations whose period overlaps any specialized-study period.
StudyExclusion exclude_vr_in_study_periods(const std::vector<Observation>& vr,
                                          const std::vector<Observation>& specialized);

struct AdjustmentSchedule {
    std::string country;
    int first_year = 0;
    std::vector<double> g;
    std::map<int, double> study_ratios;

    double at(int year) const;
};

// One input row of the model: a preprocessed observation with its error and adjustment terms.
struct ProcessedObservation {
    Observation obs;
    double sigma = 0.0;  // total sd for VR and specialized studies, sampling sd for misc sources
    double usability = -1.0;  // VR only; negative when not assessable
    double g = 1.0;
    double g_upper = 1.0;
    double point_mass = 1.0;
};

struct ReportRow {
    std::string country;
    int year = 0;
    std::size_t row = 0;
    std::string source;
    double usability = -1.0;
    std::string vr_type;
    double g = 0.0, g_upper = 0.0, point_mass = 0.0, sigma = 0.0;
    bool has_adjustment = false;
    std::string action;
};

struct PreprocessConfig {
    int first_year = 1985;
    int last_year = 2015;
    std::uint64_t seed = 20150901;
    VrErrorConfig vr_error;
    double misc_min_sampling_error = 0.25;
    double specialized_max_error = 0.5;
};

struct PreprocessResult {
    std::vector<ProcessedObservation> observations;
    std::vector<ReportRow> report;
    std::map<std::string, AdjustmentSchedule> schedules;
};

PreprocessResult preprocess(const std::vector<Observation>& observations, const EnvelopeTable& env,
                            const PreprocessConfig& cfg);

void write_preprocess_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows);
void write_model_input(const std::filesystem::path& path, const std::vector<ProcessedObservation>& obs);
std::vector<ProcessedObservation> read_model_input(const std::filesystem::path& path);

// splitmix64 finalizer; used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace bmat
