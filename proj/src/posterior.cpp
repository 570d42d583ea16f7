#include "bmat/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bmat/csv.hpp"
#include "bmat/errors.hpp"
#include "bmat/stats.hpp"

namespace bmat {

QuantileSummary summarize_values(std::vector<double> values) {
    if (values.empty()) throw InputError("cannot summarize an empty sample set");
    std::sort(values.begin(), values.end());
    return {quantile_sorted(values, 0.5), quantile_sorted(values, 0.1), quantile_sorted(values, 0.9)};
}

const EstimateRow* EstimateTable::find(const std::string& country, int year, const std::string& quantity) const {
    for (const auto& r : rows) {
        if (r.country == country && r.year == year && r.quantity == quantity) return &r;
    }
    return nullptr;
}

EstimateTable summarize(const std::vector<const ModelState*>& states, const ModelData& data) {
    if (states.empty()) throw InputError("cannot summarize an empty sample set");
    const auto& w = data.window;
    const auto years = static_cast<std::size_t>(w.years());
    EstimateTable table;
    std::vector<double> nonaids, total;
    for (std::size_t c = 0; c < data.countries.size(); ++c) {
        const auto& cd = data.countries[c];
        // [quantity][year][draw]
        std::vector<std::vector<std::vector<double>>> draws(4, std::vector<std::vector<double>>(years));
        for (const auto* s : states) {
            country_deaths(cd, w, s->alpha_country[c], s->beta, s->distortion[c], nonaids, total);
            for (std::size_t j = 0; j < years; ++j) {
                draws[0][j].push_back(total[j] / cd.births[j] * kMmrScale);
                draws[1][j].push_back(total[j] / cd.deaths[j]);
                draws[2][j].push_back(total[j]);
                draws[3][j].push_back(nonaids[j] / cd.births[j] * kMmrScale);
            }
        }
        static const char* names[] = {"mmr", "pm", "maternal_deaths", "nonaids_mmr"};
        for (std::size_t j = 0; j < years; ++j) {
            for (std::size_t q = 0; q < 4; ++q) {
                table.rows.push_back({cd.code, w.first_year + static_cast<int>(j), names[q],
                                      summarize_values(std::move(draws[q][j]))});
            }
        }
    }
    return table;
}

EstimateTable summarize(const PosteriorSamples& samples, const ModelData& data) {
    return summarize(samples.pooled(), data);
}

ObservationInterval observation_interval(const IntervalInput& in) {
    double lo = std::exp(std::log(in.y) - kZ90 * in.sigma_hat) * in.gamma_hat;
    double hi = std::exp(std::log(in.y) + kZ90 * in.sigma_hat) * in.gamma_hat;
    auto to_maternal = [&](double v) {
        if (in.definition == Definition::maternal) return v;
        return std::max(0.0, in.omega_hat * (v - in.aids_preg_pm) + in.aids_maternal_pm);
    };
    ObservationInterval out;
    out.pm = {to_maternal(lo), to_maternal(hi)};
    out.mmr = {out.pm.lower * in.deaths_per_birth, out.pm.upper * in.deaths_per_birth};
    return out;
}

std::vector<ObservationIntervalRow> observation_intervals(const std::vector<const ModelState*>& states,
                                                          const ModelData& data) {
    if (states.empty()) throw InputError("cannot summarize an empty sample set");
    auto posterior_median = [&](auto get) {
        std::vector<double> v;
        for (const auto* s : states) v.push_back(get(*s));
        return median(std::move(v));
    };
    double dhs = posterior_median([](const ModelState& s) { return s.sigma_dhs; });
    double notdhs = posterior_median([](const ModelState& s) { return s.sigma_notdhs; });

    std::vector<ObservationIntervalRow> rows;
    for (const auto& o : data.obs) {
        const auto& src = data.source[o.source].obs;
        const auto& cd = data.countries[static_cast<std::size_t>(o.country)];
        IntervalInput in;
        in.y = std::exp(o.log_y);
        if (o.kind == ObsKind::misc) {
            double ns = o.is_dhs ? dhs : notdhs;
            in.sigma_hat = std::sqrt(o.sigma2 + ns * ns);
        } else {
            in.sigma_hat = std::sqrt(o.sigma2);
        }
        in.gamma_hat = o.kind == ObsKind::vr_random
                           ? posterior_median([&](const ModelState& s) { return s.gamma[static_cast<std::size_t>(o.slot)]; })
                           : o.gamma;
        in.definition = o.definition;
        in.omega_hat = posterior_median([&](const ModelState& s) { return s.omega[static_cast<std::size_t>(o.country)]; });
        double aids_mat = 0.0, births = 0.0;
        for (std::size_t k = 0; k < o.weights.size(); ++k) {
            auto j = static_cast<std::size_t>(o.first) + k;
            aids_mat += o.weights[k] * cd.aids_maternal[j];
            births += o.weights[k] * cd.births[j];
        }
        in.aids_preg_pm = o.aids_preg / o.deaths;
        in.aids_maternal_pm = aids_mat / o.deaths;
        in.deaths_per_birth = o.deaths / o.births;

        ObservationIntervalRow r;
        r.row = src.row;
        r.country = cd.code;
        r.ref_year = src.ref_year;
        r.source = src.misc_registration ? "vr_other" : std::string(to_string(src.source_type));
        r.definition = std::string(to_string(o.definition));
        r.y = in.y;
        r.sigma_hat = in.sigma_hat;
        r.gamma_hat = in.gamma_hat;
        r.omega_hat = in.omega_hat;
        r.interval = observation_interval(in);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_estimates(const std::filesystem::path& path, const EstimateTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header({"country", "year", "quantity", "median", "q10", "q90"});
    for (const auto& r : table.rows) {
        w.field(r.country).field(static_cast<long>(r.year)).field(r.quantity);
        w.field(r.q.median).field(r.q.q10).field(r.q.q90).end_row();
    }
}

void write_observation_intervals(const std::filesystem::path& path, const std::vector<ObservationIntervalRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header({"row", "country", "ref_year", "source_type", "definition", "y", "sigma_hat", "gamma_hat", "omega_hat",
              "pm_lower", "pm_upper", "mmr_lower", "mmr_upper"});
    for (const auto& r : rows) {
        w.field(static_cast<long>(r.row)).field(r.country).field(r.ref_year).field(r.source).field(r.definition);
        w.field(r.y).field(r.sigma_hat).field(r.gamma_hat).field(r.omega_hat);
        w.field(r.interval.pm.lower).field(r.interval.pm.upper);
        w.field(r.interval.mmr.lower * kMmrScale).field(r.interval.mmr.upper * kMmrScale).end_row();
    }
}

}  // namespace bmat
