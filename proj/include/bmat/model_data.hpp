#pragma once

#include <string>
#include <vector>

#include "bmat/envelope.hpp"
#include "bmat/epi.hpp"
#include "bmat/types.hpp"
#include "bmat/vr_preprocess.hpp"

namespace bmat {

// Calendar years [first_year, last_year] carry country-year quantities. The distortion
// process runs over first_year .. last_year-1 (each step links t to t+1); the multiplier
// is anchored at 1 in anchor_year.
struct EstimationWindow {
    int first_year = 1985;
    int last_year = 2015;
    int anchor_year = 1990;

    int years() const { return last_year - first_year + 1; }
    int steps() const { return last_year - first_year; }
    int anchor_index() const { return anchor_year - first_year; }
    void validate() const;
};

inline constexpr double kSpecializedUnderreporting = 1.0;
inline constexpr double kMiscUnderreporting = 1.1;

enum class ObsKind { vr_fixed, vr_random, specialized, misc };

// One observation as the likelihood sees it.
struct ObsTerm {
    std::size_t source = 0;  // index into the processed observation list
    int country = 0;
    int first = 0;  // offset of the first weighted year in the country arrays
    std::vector<double> weights;
    double log_y = 0.0;
    double deaths = 0.0;  // D_i over the window-clipped period
    double births = 0.0;  // B_i
    double aids_preg = 0.0;  // D^(AIDS&Preg)_i
    Definition definition = Definition::maternal;
    ObsKind kind = ObsKind::misc;
    double gamma = 1.0;  // fixed reporting adjustment unless kind == vr_random
    int slot = -1;
    double sigma2 = 0.0;  // total variance, or sampling variance for misc sources
    bool is_dhs = false;
};

// Random VR adjustment gamma_{c,t} with its spike-and-slab prior.
struct GammaSlot {
    int country = 0;
    int year = 0;
    double g = 1.5;
    double g_upper = 3.0;
    double point_mass = 1.0;
};

struct CountryData {
    std::string code;
    int region = 0;
    bool is_ssa = false;
    MdgGroup group = MdgGroup::developing;
    std::vector<double> births, deaths, nonaids_deaths, log_nonaids_deaths;
    std::vector<double> aids_deaths, aids_maternal, aids_preg;
    std::vector<double> log_gdp, log_gfr, sab;
    std::vector<int> obs;
};

struct ModelData {
    EstimationWindow window;
    AidsParams aids;
    std::vector<CountryData> countries;
    std::vector<std::string> regions;
    std::vector<ObsTerm> obs;
    std::vector<GammaSlot> slots;
    std::vector<ProcessedObservation> source;  // the observations behind `obs`

    int country_index(const std::string& code) const;
    bool has_misc(bool dhs) const;
};

// Assemble the likelihood inputs. Every country in the envelope table becomes a model
// country; envelope rows must cover the whole window (missing year is an InputError).
ModelData build_model_data(const std::vector<ProcessedObservation>& observations, const EnvelopeTable& env,
                           const EstimationWindow& window, const AidsParams& aids);

// Same countries and envelopes, different observation subset (validation refits).
ModelData with_observations(const ModelData& base, const std::vector<ProcessedObservation>& observations);

}  // namespace bmat
