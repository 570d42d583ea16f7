#include "bmat/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bmat/csv.hpp"
#include "bmat/errors.hpp"

namespace bmat {

namespace {

const std::vector<std::string> kObservationColumns = {
    "country",        "start",       "end",          "definition",   "source_type",    "is_dhs",
    "maternal_deaths", "all_cause_deaths", "births", "reported_pm", "reported_mmr", "sampling_error",
    "prop_ill_defined"};

std::string_view source_token(SourceType s, bool misc_registration) {
    if (s == SourceType::vr && misc_registration) return "vr_other";
    return to_string(s);
}

void put_optional(csv::Writer& w, const std::optional<double>& v) {
    if (v) w.field(*v);
    else w.empty();
}

}  // namespace

std::string check_record(const RawRecord& r) {
    if (!(r.period_end > r.period_start)) return "bad period";
    auto nonneg = [](const std::optional<double>& v) { return !v || *v >= 0.0; };
    if (!nonneg(r.maternal_deaths) || !nonneg(r.all_cause_deaths) || !nonneg(r.births)) return "negative count";
    if (r.reported_pm && !(*r.reported_pm > 0.0 && *r.reported_pm <= 1.0)) return "reported_pm outside (0,1]";
    if (r.reported_mmr && !(*r.reported_mmr >= 0.0)) return "negative reported_mmr";
    if (r.sampling_error && !(*r.sampling_error >= 0.0)) return "negative sampling_error";
    bool has_counts = r.maternal_deaths && r.all_cause_deaths;
    // inquiries divide by envelope deaths, so maternal deaths alone suffice
    bool inquiry = r.source_type == SourceType::specialized_study && r.maternal_deaths;
    if (!has_counts && !inquiry && !r.reported_pm && !r.reported_mmr) return "no usable mortality information";
    bool is_vr = r.source_type == SourceType::vr;
    if (is_vr && !r.misc_registration && !r.prop_ill_defined) return "missing prop_ill_defined for vr";
    if (!is_vr && r.prop_ill_defined) return "prop_ill_defined given for non-vr source";
    if (r.prop_ill_defined && !(*r.prop_ill_defined >= 0.0 && *r.prop_ill_defined <= 1.0)) {
        return "prop_ill_defined outside [0,1]";
    }
    if (is_vr && !has_counts) return "vr requires maternal and all-cause deaths";
    if (r.source_type == SourceType::misc_maternal && r.definition != Definition::maternal) {
        return "definition does not match source_type";
    }
    if (r.source_type == SourceType::misc_pregnancy_related && r.definition != Definition::pregnancy_related) {
        return "definition does not match source_type";
    }
    return {};
}

Database load_database(const std::filesystem::path& observations_csv, const std::filesystem::path& envelopes_csv) {
    Database db;
    db.envelopes = read_envelopes(envelopes_csv);

    auto table = csv::read(observations_csv);
    const std::string src = observations_csv.filename().string();
    csv::require_columns(table, kObservationColumns, src);
    std::vector<std::size_t> col;
    for (const auto& name : kObservationColumns) col.push_back(table.column(name));

    db.input_rows = table.rows.size();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& f = table.rows[i];
        const std::string where = src + " row " + std::to_string(i + 1);
        RawRecord r;
        r.row = i + 1;
        r.country = f[col[0]];
        r.period_start = csv::parse_double(f[col[1]], where + " start");
        r.period_end = csv::parse_double(f[col[2]], where + " end");
        r.definition = parse_definition(f[col[3]]);
        r.source_type = parse_source_type(f[col[4]]);
        r.misc_registration = f[col[4]] == "vr_other";
        r.is_dhs = csv::parse_bool(f[col[5]], where + " is_dhs");
        r.maternal_deaths = csv::parse_optional(f[col[6]], where + " maternal_deaths");
        r.all_cause_deaths = csv::parse_optional(f[col[7]], where + " all_cause_deaths");
        r.births = csv::parse_optional(f[col[8]], where + " births");
        r.reported_pm = csv::parse_optional(f[col[9]], where + " reported_pm");
        r.reported_mmr = csv::parse_optional(f[col[10]], where + " reported_mmr");
        r.sampling_error = csv::parse_optional(f[col[11]], where + " sampling_error");
        r.prop_ill_defined = csv::parse_optional(f[col[12]], where + " prop_ill_defined");
        if (!db.envelopes.has_country(r.country)) {
            throw InputError(where + ": unknown country code '" + r.country + "'");
        }
        if (auto reason = check_record(r); !reason.empty()) {
            db.rejections.push_back({r.row, r.country, reason});
            continue;
        }
        db.records.push_back(std::move(r));
    }
    return db;
}

Database load_database(const std::filesystem::path& directory) {
    return load_database(directory / "observations.csv", directory / "envelopes.csv");
}

Observation derive_pm(const RawRecord& r, const EnvelopeAggregate& env) {
    Observation o;
    o.row = r.row;
    o.country = r.country;
    o.start = r.period_start;
    o.end = r.period_end;
    o.ref_year = 0.5 * (r.period_start + r.period_end);
    o.definition = r.definition;
    o.source_type = r.source_type;
    o.misc_registration = r.misc_registration;
    o.is_dhs = r.is_dhs;
    o.vr_type = r.misc_registration ? VrType::III : VrType::excluded;
    o.maternal_deaths = r.maternal_deaths;
    o.all_cause_deaths = r.all_cause_deaths;
    o.births = r.births;
    o.reported_pm = r.reported_pm;
    o.reported_mmr = r.reported_mmr;
    o.sampling_error = r.sampling_error;
    o.prop_ill_defined = r.prop_ill_defined;
    o.env_deaths = env.deaths;
    o.env_births = env.births;
    o.env_aids = env.aids_deaths;

    if (r.source_type == SourceType::specialized_study && r.maternal_deaths) {
        if (!(env.deaths > 0)) throw RecordRejected{"envelope deaths not positive"};
        o.y = *r.maternal_deaths / env.deaths;
        o.route = PmRoute::inquiry;
    } else if (r.maternal_deaths && r.all_cause_deaths) {
        if (!(*r.all_cause_deaths > 0)) throw RecordRejected{"all-cause deaths are zero"};
        o.y = *r.maternal_deaths / *r.all_cause_deaths;
        o.route = PmRoute::counts;
    } else if (r.reported_pm) {
        o.y = *r.reported_pm;
        o.route = PmRoute::reported_pm;
    } else if (r.reported_mmr) {
        if (!(env.deaths > 0)) throw RecordRejected{"envelope deaths not positive"};
        o.y = *r.reported_mmr * env.births / env.deaths;
        o.route = PmRoute::reported_mmr;
    } else {
        throw RecordRejected{"no usable mortality information"};
    }

    if (!std::isfinite(o.y)) throw RecordRejected{"non-finite pm"};
    if (o.y >= 1.0) throw RecordRejected{"pm >= 1"};
    if (r.source_type != SourceType::vr) {
        if (o.y <= 0.0) throw RecordRejected{"zero maternal deaths in non-vr source"};
    } else if (o.y < 0.0) {
        throw RecordRejected{"negative pm"};
    }
    return o;
}

IngestResult derive_observations(const Database& db) {
    IngestResult out;
    out.input_rows = db.input_rows;
    out.rejections = db.rejections;
    for (const auto& r : db.records) {
        try {
            auto env = aggregate_envelope(db.envelopes, r.country, r.period_start, r.period_end);
            auto o = derive_pm(r, env);
            o.index = out.observations.size();
            out.observations.push_back(std::move(o));
        } catch (const RecordRejected& e) {
            out.rejections.push_back({r.row, r.country, e.reason});
        } catch (const InputError& e) {
            out.rejections.push_back({r.row, r.country, e.what()});
        }
    }
    std::sort(out.rejections.begin(), out.rejections.end(),
              [](const Rejection& a, const Rejection& b) { return a.row < b.row; });
    return out;
}

void write_observations(const std::filesystem::path& path, const std::vector<Observation>& obs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header({"index", "row", "country", "start", "end", "ref_year", "definition", "source_type", "is_dhs",
              "vr_type", "y", "route", "maternal_deaths", "all_cause_deaths", "births", "reported_pm",
              "reported_mmr", "sampling_error", "prop_ill_defined", "env_deaths", "env_births", "env_aids"});
    for (const auto& o : obs) {
        w.field(o.index).field(o.row).field(o.country).field(o.start).field(o.end).field(o.ref_year);
        w.field(to_string(o.definition)).field(source_token(o.source_type, o.misc_registration));
        w.field(o.is_dhs ? "1" : "0").field(to_string(o.vr_type)).field(o.y).field(to_string(o.route));
        put_optional(w, o.maternal_deaths);
        put_optional(w, o.all_cause_deaths);
        put_optional(w, o.births);
        put_optional(w, o.reported_pm);
        put_optional(w, o.reported_mmr);
        put_optional(w, o.sampling_error);
        put_optional(w, o.prop_ill_defined);
        w.field(o.env_deaths).field(o.env_births).field(o.env_aids);
        w.end_row();
    }
}

std::vector<Observation> read_observations(const std::filesystem::path& path) {
    auto t = csv::read(path);
    const std::string src = path.filename().string();
    auto col = [&](const char* n) { return t.column(n); };
    std::vector<Observation> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const std::string where = src + " row " + std::to_string(i + 1);
        Observation o;
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
        auto route = f[col("route")];
        o.route = route == "inquiry"        ? PmRoute::inquiry
                  : route == "reported_pm"  ? PmRoute::reported_pm
                  : route == "reported_mmr" ? PmRoute::reported_mmr
                                            : PmRoute::counts;
        o.maternal_deaths = csv::parse_optional(f[col("maternal_deaths")], where);
        o.all_cause_deaths = csv::parse_optional(f[col("all_cause_deaths")], where);
        o.births = csv::parse_optional(f[col("births")], where);
        o.reported_pm = csv::parse_optional(f[col("reported_pm")], where);
        o.reported_mmr = csv::parse_optional(f[col("reported_mmr")], where);
        o.sampling_error = csv::parse_optional(f[col("sampling_error")], where);
        o.prop_ill_defined = csv::parse_optional(f[col("prop_ill_defined")], where);
        o.env_deaths = csv::parse_double(f[col("env_deaths")], where);
        o.env_births = csv::parse_double(f[col("env_births")], where);
        o.env_aids = csv::parse_double(f[col("env_aids")], where);
        out.push_back(std::move(o));
    }
    return out;
}

void write_rejections(const std::filesystem::path& path, const std::vector<Rejection>& rejections) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header({"row", "country", "reason"});
    for (const auto& r : rejections) {
        std::string reason = r.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        w.field(r.row).field(r.country).field(reason);
        w.end_row();
    }
}

void write_raw_records(const std::filesystem::path& path, const std::vector<RawRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header(kObservationColumns);
    for (const auto& r : records) {
        w.field(r.country).field(r.period_start).field(r.period_end).field(to_string(r.definition));
        w.field(source_token(r.source_type, r.misc_registration)).field(r.is_dhs ? "1" : "0");
        put_optional(w, r.maternal_deaths);
        put_optional(w, r.all_cause_deaths);
        put_optional(w, r.births);
        put_optional(w, r.reported_pm);
        put_optional(w, r.reported_mmr);
        put_optional(w, r.sampling_error);
        put_optional(w, r.prop_ill_defined);
        w.end_row();
    }
}

}  // namespace bmat
