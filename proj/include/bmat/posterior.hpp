#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bmat/likelihood.hpp"
#include "bmat/model_data.hpp"
#include "bmat/sampler.hpp"

namespace bmat {

inline constexpr double kZ90 = 1.2816;
inline constexpr double kMmrScale = 1e5;  // MMR is reported per 100,000 live births

struct QuantileSummary {
    double median = 0.0;
    double q10 = 0.0;
    double q90 = 0.0;
};

QuantileSummary summarize_values(std::vector<double> values);

// Quantities: "mmr" and "nonaids_mmr" per 100,000 births, "pm" (maternal deaths over
// all deaths), "maternal_deaths".
struct EstimateRow {
    std::string country;
    int year = 0;
    std::string quantity;
    QuantileSummary q;
};

struct EstimateTable {
    std::vector<EstimateRow> rows;

    const EstimateRow* find(const std::string& country, int year, const std::string& quantity) const;
};

EstimateTable summarize(const std::vector<const ModelState*>& states, const ModelData& data);
EstimateTable summarize(const PosteriorSamples& samples, const ModelData& data);

struct IntervalInput {
    double y = 0.0;
    double sigma_hat = 0.0;
    double gamma_hat = 1.0;
    Definition definition = Definition::maternal;
    double omega_hat = 1.0;
    double aids_preg_pm = 0.0;      // D^(AIDS&Preg)_i / D_i
    double aids_maternal_pm = 0.0;  // D^(AIDS&Mat)_i / D_i
    double deaths_per_birth = 1.0;  // D_i / B_i
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

struct ObservationInterval {
    Interval pm;   // maternal PM scale
    Interval mmr;  // per birth
};

// Approximate 80% interval of an observation, mapped to the maternal PM and MMR scales.
ObservationInterval observation_interval(const IntervalInput& in);

struct ObservationIntervalRow {
    std::size_t row = 0;
    std::string country;
    double ref_year = 0.0;
    std::string source;
    std::string definition;
    double y = 0.0;
    double sigma_hat = 0.0;
    double gamma_hat = 1.0;
    double omega_hat = 1.0;
    ObservationInterval interval;
};

std::vector<ObservationIntervalRow> observation_intervals(const std::vector<const ModelState*>& states,
                                                          const ModelData& data);

void write_estimates(const std::filesystem::path& path, const EstimateTable& table);
void write_observation_intervals(const std::filesystem::path& path, const std::vector<ObservationIntervalRow>& rows);

}  // namespace bmat
