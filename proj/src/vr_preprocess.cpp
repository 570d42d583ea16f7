#include "bmat/vr_preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "bmat/csv.hpp"
#include "bmat/errors.hpp"

namespace bmat {

namespace {

constexpr double kTypeOneUsability = 0.8;
constexpr double kRunUsability = 0.6;
constexpr int kMinRunLength = 3;
constexpr int kMaxYearStep = 2;  // one missing calendar year between run members
constexpr int kBackExtrapolationYears = 5;

int calendar_year(const Observation& o) { return static_cast<int>(std::floor(o.midpoint())); }

bool overlaps(const Observation& a, const Observation& b) { return a.start < b.end && b.start < a.end; }

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double usability(double vr_deaths, double envelope_deaths, double p_ill) {
    if (!(envelope_deaths > 0)) throw InputError("usability: envelope deaths must be positive");
    if (!(p_ill >= 0 && p_ill <= 1)) throw InputError("usability: p_ill must lie in [0,1]");
    return std::min(1.0, vr_deaths / envelope_deaths) * (1.0 - p_ill);
}

std::vector<VrType> classify_vr(std::span<const VrYear> series) {
    std::vector<VrType> out(series.size(), VrType::excluded);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].misc_registration) {
            out[i] = VrType::III;
        } else if (series[i].usability > kRunUsability) {
            candidates.push_back(i);
        }
    }
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        return series[a].year != series[b].year ? series[a].year < series[b].year : a < b;
    });

    auto close_run = [&](std::size_t begin, std::size_t end) {
        if (static_cast<int>(end - begin) < kMinRunLength) return;
        for (std::size_t k = begin; k < end; ++k) {
            auto i = candidates[k];
            out[i] = series[i].usability > kTypeOneUsability ? VrType::I : VrType::II;
        }
    };
    std::size_t run_begin = 0;
    for (std::size_t k = 1; k <= candidates.size(); ++k) {
        bool breaks = k == candidates.size() ||
                      series[candidates[k]].year - series[candidates[k - 1]].year > kMaxYearStep;
        if (breaks) {
            close_run(run_begin, k);
            run_begin = k;
        }
    }
    return out;
}

MergeOutcome merge_zero_years(std::vector<Observation> series) {
    MergeOutcome result;
    std::sort(series.begin(), series.end(), [](const Observation& a, const Observation& b) {
        return a.start != b.start ? a.start < b.start : a.row < b.row;
    });
    std::vector<std::size_t> zeros, recipients;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series[i].maternal_deaths || !series[i].all_cause_deaths) {
            throw InputError("merge_zero_years: vr observation without counts (row " +
                             std::to_string(series[i].row) + ")");
        }
        (*series[i].maternal_deaths == 0.0 ? zeros : recipients).push_back(i);
    }
    if (recipients.empty()) {
        result.all_zero = !series.empty();
        return result;
    }
    std::vector<double> original_mid(series.size()), weighted_mid(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        original_mid[i] = series[i].ref_year;
        weighted_mid[i] = *series[i].all_cause_deaths * series[i].ref_year;
    }
    for (auto z : zeros) {
        std::size_t best = recipients.front();
        double best_dist = std::abs(original_mid[best] - original_mid[z]);
        for (auto r : recipients) {
            double dist = std::abs(original_mid[r] - original_mid[z]);
            if (dist < best_dist) {
                best = r;
                best_dist = dist;
            }
        }
        auto& rec = series[best];
        const auto& zero = series[z];
        double d_zero = *zero.all_cause_deaths;
        rec.all_cause_deaths = *rec.all_cause_deaths + d_zero;
        weighted_mid[best] += d_zero * original_mid[z];
        rec.start = std::min(rec.start, zero.start);
        rec.end = std::max(rec.end, zero.end);
        rec.ref_year = weighted_mid[best] / *rec.all_cause_deaths;
        rec.y = *rec.maternal_deaths / *rec.all_cause_deaths;
        result.merges.push_back({zero.row, rec.row});
    }
    for (auto r : recipients) result.series.push_back(series[r]);
    return result;
}

std::vector<double> build_adjustment_schedule(int first_year, int last_year, const std::map<int, double>& ratios) {
    std::vector<double> g(static_cast<std::size_t>(std::max(0, last_year - first_year + 1)), kDefaultAdjustment);
    if (ratios.empty()) return g;
    const auto [y_first, r_first] = *ratios.begin();
    const auto [y_last, r_last] = *ratios.rbegin();
    for (int year = first_year; year <= last_year; ++year) {
        double v;
        if (year <= y_first) {
            int k = y_first - year;
            if (k == 0 || r_first >= kDefaultAdjustment) {
                v = r_first;
            } else if (k >= kBackExtrapolationYears) {
                v = kDefaultAdjustment;
            } else {
                v = r_first + (kDefaultAdjustment - r_first) * k / kBackExtrapolationYears;
            }
        } else if (year >= y_last) {
            v = r_last;
        } else {
            auto hi = ratios.lower_bound(year);
            if (hi->first == year) {
                v = hi->second;
            } else {
                auto lo = std::prev(hi);
                double w = static_cast<double>(year - lo->first) / (hi->first - lo->first);
                v = lo->second + w * (hi->second - lo->second);
            }
        }
        g[static_cast<std::size_t>(year - first_year)] = v;
    }
    return g;
}

GammaEnvelope gamma_prior_envelope(double g, double u, VrType type) {
    if (type == VrType::excluded) throw InputError("gamma_prior_envelope: excluded vr observation");
    if (type == VrType::I) return {g, 1.0};
    double upper = (type == VrType::II && g < kMaxAdjustment)
                       ? g + (kMaxAdjustment - g) * (kTypeOneUsability - u) / (kTypeOneUsability - kRunUsability)
                       : kMaxAdjustment;
    if (upper <= g) return {g >= kMaxAdjustment ? kMaxAdjustment : g, 1.0};
    // Lower reference point of the point-mass share; see the project notes on the
    // (2.0, 0.70) -> (2.5, 0.5) reference case.
    const double base = g - 0.5;
    return {upper, (g - base) / (upper - base)};
}

double vr_total_error(double vr_deaths, double y, double g, VrType type, std::uint64_t seed,
                      const VrErrorConfig& cfg) {
    if (!(vr_deaths > 0)) throw InputError("vr_total_error: vr deaths must be positive");
    if (!(y > 0 && y < 1)) throw InputError("vr_total_error: y must lie in (0,1)");
    if (!(g > 0)) throw InputError("vr_total_error: g must be positive");
    if (cfg.draws < 2) throw InputError("vr_total_error: need at least 2 draws");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    const long long n = std::llround(vr_deaths);
    const double log_d = std::log(vr_deaths);
    double mean = 0.0, m2 = 0.0;
    for (int h = 0; h < cfg.draws; ++h) {
        double mult = cfg.multiplier_sd > 0 ? std::exp(cfg.multiplier_sd * z(rng)) : 1.0;
        double p = std::clamp(y * mult, cfg.clamp, 1.0 - cfg.clamp);  // y/g * (g * mult)
        std::binomial_distribution<long long> bin(n, p);
        double m = static_cast<double>(bin(rng));
        double v = std::log(std::max(m, 0.5)) - log_d;
        double delta = v - mean;
        mean += delta / (h + 1);
        m2 += delta * (v - mean);
    }
    double sigma = std::sqrt(m2 / (cfg.draws - 1));
    if (type == VrType::I) sigma = std::min(sigma, cfg.type1_cap);
    return sigma;
}

StudyExclusion exclude_vr_in_study_periods(const std::vector<Observation>& vr,
                                          const std::vector<Observation>& specialized) {
    StudyExclusion out;
    for (const auto& v : vr) {
        bool hit = std::any_of(specialized.begin(), specialized.end(),
                               [&](const Observation& s) { return overlaps(v, s); });
        (hit ? out.dropped : out.kept).push_back(v);
    }
    return out;
}

double AdjustmentSchedule::at(int year) const {
    if (g.empty()) return kDefaultAdjustment;
    int idx = std::clamp(year - first_year, 0, static_cast<int>(g.size()) - 1);
    return g[static_cast<std::size_t>(idx)];
}

PreprocessResult preprocess(const std::vector<Observation>& observations, const EnvelopeTable& env,
                            const PreprocessConfig& cfg) {
    PreprocessResult result;
    std::map<std::string, std::vector<const Observation*>> by_country;
    for (const auto& o : observations) by_country[o.country].push_back(&o);

    auto report = [&](const Observation& o, const std::string& action) -> ReportRow& {
        ReportRow r;
        r.country = o.country;
        r.year = calendar_year(o);
        r.row = o.row;
        r.source = o.misc_registration ? "vr_other" : std::string(to_string(o.source_type));
        r.vr_type = o.is_vr() ? std::string(to_string(o.vr_type)) : "";
        r.action = action;
        result.report.push_back(r);
        return result.report.back();
    };

    for (const auto& [country, list] : by_country) {
        std::vector<Observation> vr, specialized, misc;
        for (const auto* o : list) {
            if (o->is_vr()) vr.push_back(*o);
            else if (o->source_type == SourceType::specialized_study) specialized.push_back(*o);
            else misc.push_back(*o);
        }

        // usability and classification over the complete VR series
        std::vector<double> u(vr.size(), -1.0);
        std::vector<VrYear> years;
        for (std::size_t i = 0; i < vr.size(); ++i) {
            if (vr[i].prop_ill_defined) {
                u[i] = usability(*vr[i].all_cause_deaths, vr[i].env_deaths, *vr[i].prop_ill_defined);
            }
            years.push_back({calendar_year(vr[i]), std::max(u[i], 0.0), vr[i].misc_registration});
        }
        auto types = classify_vr(years);
        std::map<std::size_t, double> usability_by_row;
        for (std::size_t i = 0; i < vr.size(); ++i) {
            vr[i].vr_type = types[i];
            usability_by_row[vr[i].row] = u[i];
        }

        // study ratios against pooled type I/II VR over each study period
        std::map<int, std::vector<double>> ratio_lists;
        std::map<std::size_t, std::size_t> pooled_years;
        for (const auto& s : specialized) {
            double m = 0.0, d = 0.0;
            std::size_t n = 0;
            for (const auto& v : vr) {
                if ((v.vr_type == VrType::I || v.vr_type == VrType::II) && overlaps(v, s)) {
                    m += *v.maternal_deaths;
                    d += *v.all_cause_deaths;
                    ++n;
                }
            }
            if (n == 0 || m <= 0.0 || d <= 0.0) continue;
            ratio_lists[calendar_year(s)].push_back(s.y / (m / d));
            pooled_years[s.row] = n;
        }
        AdjustmentSchedule schedule;
        schedule.country = country;
        for (auto& [year, list_r] : ratio_lists) {
            schedule.study_ratios[year] = std::accumulate(list_r.begin(), list_r.end(), 0.0) / list_r.size();
        }
        int lo = cfg.first_year, hi = cfg.last_year;
        for (const auto& v : vr) {
            lo = std::min(lo, calendar_year(v));
            hi = std::max(hi, calendar_year(v));
        }
        for (const auto& [year, r] : schedule.study_ratios) {
            lo = std::min(lo, year);
            hi = std::max(hi, year);
        }
        schedule.first_year = lo;
        schedule.g = build_adjustment_schedule(lo, hi, schedule.study_ratios);

        // inclusion
        std::vector<Observation> included;
        for (const auto& v : vr) {
            if (v.vr_type == VrType::excluded) {
                auto& r = report(v, "excluded:usability");
                r.usability = usability_by_row[v.row];
            } else {
                included.push_back(v);
            }
        }
        auto split = exclude_vr_in_study_periods(included, specialized);
        for (const auto& v : split.dropped) {
            auto& r = report(v, "excluded:study_period");
            r.usability = usability_by_row[v.row];
        }
        auto merged = merge_zero_years(split.kept);
        if (merged.all_zero) {
            for (const auto& v : split.kept) {
                auto& r = report(v, "excluded:all_zero_series");
                r.usability = usability_by_row[v.row];
            }
        }
        for (const auto& mz : merged.merges) {
            auto it = std::find_if(split.kept.begin(), split.kept.end(),
                                   [&](const Observation& v) { return v.row == mz.zero_row; });
            auto& r = report(*it, "merged:into_row_" + std::to_string(mz.recipient_row));
            r.usability = usability_by_row[it->row];
        }

        for (auto v : merged.series) {
            auto agg = aggregate_envelope(env, v.country, v.start, v.end);
            v.env_deaths = agg.deaths;
            v.env_births = agg.births;
            v.env_aids = agg.aids_deaths;
            ProcessedObservation p;
            p.usability = usability_by_row[v.row];
            int year = static_cast<int>(std::floor(v.ref_year));
            p.g = schedule.at(year);
            auto envelope = gamma_prior_envelope(p.g, std::max(p.usability, 0.0), v.vr_type);
            p.g_upper = envelope.g_upper;
            p.point_mass = envelope.point_mass;
            p.sigma = vr_total_error(*v.all_cause_deaths, v.y, p.g, v.vr_type, mix_seed(cfg.seed, v.row), cfg.vr_error);
            p.obs = v;
            auto& r = report(v, "kept");
            r.year = year;
            r.usability = p.usability;
            r.g = p.g;
            r.g_upper = p.g_upper;
            r.point_mass = p.point_mass;
            r.sigma = p.sigma;
            r.has_adjustment = true;
            result.observations.push_back(std::move(p));
        }

        for (const auto& s : specialized) {
            ProcessedObservation p;
            p.obs = s;
            if (s.sampling_error) {
                p.sigma = *s.sampling_error;
            } else {
                double n = s.all_cause_deaths ? *s.all_cause_deaths : s.env_deaths;
                p.sigma = std::min(cfg.specialized_max_error, std::sqrt((1.0 - s.y) / (n * s.y)));
            }
            auto it = pooled_years.find(s.row);
            std::string action = "kept";
            if (it != pooled_years.end() && it->second > 1) {
                action = "kept:ratio_pooled_over_" + std::to_string(it->second) + "_vr_years";
            }
            auto& r = report(s, action);
            r.sigma = p.sigma;
            result.observations.push_back(std::move(p));
        }

        double max_s = -1.0;
        for (const auto& m : misc) {
            if (m.sampling_error) max_s = std::max(max_s, *m.sampling_error);
        }
        for (const auto& m : misc) {
            ProcessedObservation p;
            p.obs = m;
            p.sigma = m.sampling_error ? *m.sampling_error : std::max(cfg.misc_min_sampling_error, max_s);
            auto& r = report(m, m.sampling_error ? "kept" : "kept:sampling_error_imputed");
            r.sigma = p.sigma;
            result.observations.push_back(std::move(p));
        }
        result.schedules[country] = std::move(schedule);
    }

    // drop or clip observations against the estimation window
    std::vector<ProcessedObservation> in_window;
    const double lo = cfg.first_year, hi = cfg.last_year + 1.0;
    for (auto& p : result.observations) {
        if (p.obs.end <= lo || p.obs.start >= hi) {
            for (auto& r : result.report) {
                if (r.row == p.obs.row && r.action.rfind("kept", 0) == 0) r.action = "excluded:outside_window";
            }
            continue;
        }
        if (p.obs.start < lo || p.obs.end > hi) {
            p.obs.start = std::max(p.obs.start, lo);
            p.obs.end = std::min(p.obs.end, hi);
            p.obs.ref_year = std::clamp(p.obs.ref_year, p.obs.start, p.obs.end);
            auto agg = aggregate_envelope(env, p.obs.country, p.obs.start, p.obs.end);
            p.obs.env_deaths = agg.deaths;
            p.obs.env_births = agg.births;
            p.obs.env_aids = agg.aids_deaths;
            for (auto& r : result.report) {
                if (r.row == p.obs.row && r.action.rfind("kept", 0) == 0) r.action += ":clipped_to_window";
            }
        }
        in_window.push_back(std::move(p));
    }
    std::sort(in_window.begin(), in_window.end(), [](const ProcessedObservation& a, const ProcessedObservation& b) {
        return a.obs.row < b.obs.row;
    });
    for (std::size_t i = 0; i < in_window.size(); ++i) in_window[i].obs.index = i;
    result.observations = std::move(in_window);
    std::stable_sort(result.report.begin(), result.report.end(), [](const ReportRow& a, const ReportRow& b) {
        return a.country != b.country ? a.country < b.country : a.row < b.row;
    });
    return result;
}

void write_preprocess_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header({"country", "year", "row", "source", "usability", "vr_type", "g", "g_upper", "point_mass", "sigma_i",
              "action"});
    for (const auto& r : rows) {
        w.field(r.country).field(static_cast<long>(r.year)).field(r.row).field(r.source);
        if (r.usability >= 0) w.field(r.usability);
        else w.empty();
        w.field(r.vr_type);
        if (r.has_adjustment) w.field(r.g).field(r.g_upper).field(r.point_mass);
        else w.empty().empty().empty();
        if (r.sigma > 0) w.field(r.sigma);
        else w.empty();
        w.field(r.action);
        w.end_row();
    }
}

void write_model_input(const std::filesystem::path& path, const std::vector<ProcessedObservation>& obs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header({"index", "row", "country", "start", "end", "ref_year", "definition", "source_type", "is_dhs",
              "vr_type", "y", "sigma", "usability", "g", "g_upper", "point_mass", "env_deaths", "env_births",
              "env_aids", "maternal_deaths", "all_cause_deaths"});
    for (const auto& p : obs) {
        const auto& o = p.obs;
        w.field(o.index).field(o.row).field(o.country).field(o.start).field(o.end).field(o.ref_year);
        w.field(to_string(o.definition));
        w.field(o.misc_registration ? std::string_view("vr_other") : to_string(o.source_type));
        w.field(o.is_dhs ? "1" : "0").field(to_string(o.vr_type)).field(o.y).field(p.sigma).field(p.usability);
        w.field(p.g).field(p.g_upper).field(p.point_mass).field(o.env_deaths).field(o.env_births).field(o.env_aids);
        if (o.maternal_deaths) w.field(*o.maternal_deaths);
        else w.empty();
        if (o.all_cause_deaths) w.field(*o.all_cause_deaths);
        else w.empty();
        w.end_row();
    }
}

std::vector<ProcessedObservation> read_model_input(const std::filesystem::path& path) {
    auto t = csv::read(path);
    const std::string src = path.filename().string();
    auto col = [&](const char* n) { return t.column(n); };
    std::vector<ProcessedObservation> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const std::string where = src + " row " + std::to_string(i + 1);
        ProcessedObservation p;
        auto& o = p.obs;
        o.index = static_cast<std::size_t>(csv::parse_long(f[col("index")], where));
        o.row = static_cast<std::size_t>(csv::parse_long(f[col("row")], where));
        o.country = f[col("country")];
        o.start = csv::parse_double(f[col("start")], where);
        o.end = csv::parse_double(f[col("end")], where);
        o.ref_year = csv::parse_double(f[col("ref_year")], where);
        o.definition = parse_definition(f[col("definition")]);
        o.source_type = parse_source_type(f[col("source_type")]);
        o.misc_registration = f[col("source_type")] == "vr_other";
        o.is_dhs = csv::parse_bool(f[col("is_dhs")], where);
        o.vr_type = parse_vr_type(f[col("vr_type")]);
        o.y = csv::parse_double(f[col("y")], where);
        p.sigma = csv::parse_double(f[col("sigma")], where);
        p.usability = csv::parse_double(f[col("usability")], where);
        p.g = csv::parse_double(f[col("g")], where);
        p.g_upper = csv::parse_double(f[col("g_upper")], where);
        p.point_mass = csv::parse_double(f[col("point_mass")], where);
        o.env_deaths = csv::parse_double(f[col("env_deaths")], where);
        o.env_births = csv::parse_double(f[col("env_births")], where);
        o.env_aids = csv::parse_double(f[col("env_aids")], where);
        o.maternal_deaths = csv::parse_optional(f[col("maternal_deaths")], where);
        o.all_cause_deaths = csv::parse_optional(f[col("all_cause_deaths")], where);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace bmat
