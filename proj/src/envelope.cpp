#include "bmat/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "bmat/csv.hpp"
#include "bmat/errors.hpp"

namespace bmat {

EnvelopeTable::EnvelopeTable(std::vector<CountryYearEnvelope> rows) : rows_(std::move(rows)) {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& r = rows_[i];
        auto [it, inserted] = by_country_[r.country].emplace(r.year, i);
        if (!inserted) {
            throw InputError("duplicate envelope row for " + r.country + " " + std::to_string(r.year));
        }
    }
}

const CountryYearEnvelope* EnvelopeTable::find(const std::string& code, int year) const {
    auto c = by_country_.find(code);
    if (c == by_country_.end()) return nullptr;
    auto y = c->second.find(year);
    if (y == c->second.end()) return nullptr;
    return &rows_[y->second];
}

const CountryYearEnvelope& EnvelopeTable::at(const std::string& code, int year) const {
    if (!has_country(code)) throw InputError("unknown country code '" + code + "'");
    const auto* row = find(code, year);
    if (!row) throw InputError("missing envelope year " + std::to_string(year) + " for " + code);
    return *row;
}

std::vector<CountryInfo> EnvelopeTable::countries() const {
    std::vector<CountryInfo> out;
    for (const auto& [code, years] : by_country_) {
        const auto& first = rows_[years.begin()->second];
        out.push_back({code, first.region, first.is_ssa, first.mdg_group});
    }
    return out;
}

std::vector<std::pair<int, double>> year_overlaps(double start, double end) {
    std::vector<std::pair<int, double>> out;
    if (!(end > start)) return out;
    int first = static_cast<int>(std::floor(start));
    int last = static_cast<int>(std::ceil(end)) - 1;
    for (int y = first; y <= last; ++y) {
        double lo = std::max(start, static_cast<double>(y));
        double hi = std::min(end, static_cast<double>(y + 1));
        if (hi > lo) out.emplace_back(y, hi - lo);
    }
    return out;
}

EnvelopeAggregate aggregate_envelope(const EnvelopeTable& env, const std::string& country, double start,
                                     double end) {
    if (!env.has_country(country)) throw InputError("unknown country code '" + country + "'");
    EnvelopeAggregate agg;
    for (auto [year, frac] : year_overlaps(start, end)) {
        const auto& row = env.at(country, year);
        agg.deaths += frac * row.deaths;
        agg.births += frac * row.births;
        agg.aids_deaths += frac * row.aids_deaths;
    }
    return agg;
}

EnvelopeTable read_envelopes(const std::filesystem::path& path) {
    auto table = csv::read(path);
    const std::string src = path.filename().string();
    csv::require_columns(table,
                         {"country", "year", "births", "deaths", "aids_deaths", "gdp", "gfr", "sab", "region",
                          "is_ssa", "mdg_group"},
                         src);
    const auto c_country = table.column("country"), c_year = table.column("year"),
               c_births = table.column("births"), c_deaths = table.column("deaths"),
               c_aids = table.column("aids_deaths"), c_gdp = table.column("gdp"), c_gfr = table.column("gfr"),
               c_sab = table.column("sab"), c_region = table.column("region"), c_ssa = table.column("is_ssa"),
               c_mdg = table.column("mdg_group");
    std::vector<CountryYearEnvelope> rows;
    rows.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& f = table.rows[i];
        const std::string where = src + " row " + std::to_string(i + 1);
        CountryYearEnvelope e;
        e.country = f[c_country];
        e.year = static_cast<int>(csv::parse_long(f[c_year], where + " year"));
        e.births = csv::parse_double(f[c_births], where + " births");
        e.deaths = csv::parse_double(f[c_deaths], where + " deaths");
        e.aids_deaths = csv::parse_double(f[c_aids], where + " aids_deaths");
        e.gdp = csv::parse_double(f[c_gdp], where + " gdp");
        e.gfr = csv::parse_double(f[c_gfr], where + " gfr");
        e.sab = csv::parse_double(f[c_sab], where + " sab");
        e.region = f[c_region];
        e.is_ssa = csv::parse_bool(f[c_ssa], where + " is_ssa");
        e.mdg_group = parse_mdg_group(f[c_mdg]);
        if (e.country.empty()) throw InputError(where + ": empty country code");
        if (!(e.births > 0) || !(e.deaths > 0)) throw InputError(where + ": births and deaths must be positive");
        if (e.aids_deaths < 0 || e.aids_deaths > e.deaths) {
            throw InputError(where + ": aids_deaths must lie in [0, deaths]");
        }
        if (!(e.gdp > 0) || !(e.gfr > 0)) throw InputError(where + ": gdp and gfr must be positive");
        if (e.sab < 0 || e.sab > 1) throw InputError(where + ": sab must lie in [0,1]");
        rows.push_back(std::move(e));
    }
    return EnvelopeTable(std::move(rows));
}

void write_envelopes(const std::filesystem::path& path, const EnvelopeTable& env) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header({"country", "year", "births", "deaths", "aids_deaths", "gdp", "gfr", "sab", "region", "is_ssa",
              "mdg_group"});
    for (const auto& r : env.rows()) {
        w.field(r.country).field(static_cast<long>(r.year)).field(r.births).field(r.deaths).field(r.aids_deaths);
        w.field(r.gdp).field(r.gfr).field(r.sab).field(r.region).field(r.is_ssa ? "1" : "0");
        w.field(to_string(r.mdg_group));
        w.end_row();
    }
}

}  // namespace bmat
