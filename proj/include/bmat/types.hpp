#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace bmat {

enum class Definition { maternal, pregnancy_related };
enum class SourceType { vr, specialized_study, misc_maternal, misc_pregnancy_related };
enum class VrType { I, II, III, excluded };
enum class MdgGroup { developed, developing };

std::string_view to_string(Definition d);
std::string_view to_string(SourceType s);
std::string_view to_string(VrType v);
std::string_view to_string(MdgGroup g);

Definition parse_definition(std::string_view s);
SourceType parse_source_type(std::string_view s);
VrType parse_vr_type(std::string_view s);
MdgGroup parse_mdg_group(std::string_view s);

// One row of observations.csv after parsing. Empty CSV fields stay empty optionals.
struct RawRecord {
    std::size_t row = 0;  // 1-based data row in the source file
    std::string country;
    double period_start = 0.0;
    double period_end = 0.0;
    Definition definition = Definition::maternal;
    SourceType source_type = SourceType::vr;
    // Registration data from systems whose quality cannot be assessed (VR type III).
    // Written as source_type "vr_other" in the CSV.
    bool misc_registration = false;
    bool is_dhs = false;
    std::optional<double> maternal_deaths;
    std::optional<double> all_cause_deaths;
    std::optional<double> births;
    std::optional<double> reported_pm;
    std::optional<double> reported_mmr;  // deaths per birth
    std::optional<double> sampling_error;
    std::optional<double> prop_ill_defined;
};

// How the PM of an observation was obtained from its record.
enum class PmRoute { counts, inquiry, reported_pm, reported_mmr };
std::string_view to_string(PmRoute r);

// A record turned into a PM-scale observation.
struct Observation {
    std::size_t index = 0;  // position in the accepted list
    std::size_t row = 0;    // source row in observations.csv
    std::string country;
    double start = 0.0;
    double end = 0.0;
    double ref_year = 0.0;  // midpoint unless recomputed by the zero-year merge
    Definition definition = Definition::maternal;
    SourceType source_type = SourceType::vr;
    bool misc_registration = false;
    bool is_dhs = false;
    VrType vr_type = VrType::excluded;
    double y = 0.0;
    PmRoute route = PmRoute::counts;
    std::optional<double> maternal_deaths;
    std::optional<double> all_cause_deaths;
    std::optional<double> births;
    std::optional<double> reported_pm;
    std::optional<double> reported_mmr;
    std::optional<double> sampling_error;
    std::optional<double> prop_ill_defined;
    // envelope aggregates over [start, end)
    double env_deaths = 0.0;
    double env_births = 0.0;
    double env_aids = 0.0;

    double midpoint() const { return 0.5 * (start + end); }
    bool is_vr() const { return source_type == SourceType::vr; }
};

}  // namespace bmat
