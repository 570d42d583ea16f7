#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bmat/types.hpp"

namespace bmat {

// Exogenous UN-style totals and covariates for one country-year.
struct CountryYearEnvelope {
    std::string country;
    int year = 0;
    double births = 0.0;       // B
    double deaths = 0.0;       // all-cause female deaths 15-49, D
    double aids_deaths = 0.0;  // D^(AIDS)
    double gdp = 0.0;
    double gfr = 0.0;  // births per woman-year
    double sab = 0.0;  // share of births with a skilled attendant, in [0,1]
    std::string region;
    bool is_ssa = false;
    MdgGroup mdg_group = MdgGroup::developing;
};

struct EnvelopeAggregate {
    double deaths = 0.0;
    double births = 0.0;
    double aids_deaths = 0.0;
};

struct CountryInfo {
    std::string code;
    std::string region;
    bool is_ssa = false;
    MdgGroup mdg_group = MdgGroup::developing;
};

// Envelope rows indexed by country and calendar year.
class EnvelopeTable {
public:
    EnvelopeTable() = default;
    explicit EnvelopeTable(std::vector<CountryYearEnvelope> rows);

    bool has_country(const std::string& code) const { return by_country_.count(code) > 0; }
    const CountryYearEnvelope& at(const std::string& code, int year) const;
    const CountryYearEnvelope* find(const std::string& code, int year) const;

    // Countries in sorted code order.
    std::vector<CountryInfo> countries() const;
    const std::vector<CountryYearEnvelope>& rows() const { return rows_; }

private:
    std::vector<CountryYearEnvelope> rows_;
    std::map<std::string, std::map<int, std::size_t>> by_country_;
};

// Sum of envelope totals over [start, end). Calendar year t covers [t, t+1); partially
// covered years contribute in proportion to the covered fraction.
EnvelopeAggregate aggregate_envelope(const EnvelopeTable& env, const std::string& country, double start, double end);

// Overlap of [start, end) with each calendar year it touches: (year, fraction) pairs.
std::vector<std::pair<int, double>> year_overlaps(double start, double end);

EnvelopeTable read_envelopes(const std::filesystem::path& path);
void write_envelopes(const std::filesystem::path& path, const EnvelopeTable& env);

}  // namespace bmat
