#include "bmat/validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

#include "bmat/csv.hpp"
#include "bmat/errors.hpp"
#include "bmat/stats.hpp"

namespace bmat {

Split split_random(const std::vector<ProcessedObservation>& obs, double fraction, std::uint64_t seed) {
    if (!(fraction > 0 && fraction < 1)) throw InputError("validation fraction must lie in (0,1)");
    const std::size_t n = obs.size();
    auto n_test = static_cast<std::size_t>(std::llround(fraction * double(n)));
    if (n < 2 || n_test == 0 || n_test == n) throw InputError("too few observations for a random split");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = 0; i < n_test; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    std::vector<bool> in_test(n, false);
    for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = true;
    Split s;
    for (std::size_t i = 0; i < n; ++i) (in_test[i] ? s.test : s.training).push_back(obs[i]);
    return s;
}

Split split_recent(const std::vector<ProcessedObservation>& obs, double cutoff) {
    Split s;
    for (const auto& o : obs) (o.obs.ref_year >= cutoff ? s.test : s.training).push_back(o);
    return s;
}

std::vector<PredictiveSummary> predictive_draws(const std::vector<const ModelState*>& states,
                                                const ModelData& training, const std::vector<ProcessedObservation>& test,
                                                std::uint64_t seed, int draws_per_state) {
    if (states.empty()) throw InputError("predictive draws need a non-empty sample set");
    ModelData test_data = with_observations(training, test);
    // test slot -> training slot with the same country-year, if any
    std::vector<int> slot_map;
    for (const auto& ts : test_data.slots) {
        int match = -1;
        for (std::size_t k = 0; k < training.slots.size(); ++k) {
            if (training.slots[k].country == ts.country && training.slots[k].year == ts.year) match = static_cast<int>(k);
        }
        slot_map.push_back(match);
    }

    Rng rng(seed);
    std::vector<std::vector<double>> draws(test.size());
    std::vector<double> nonaids, total;
    for (const auto* s : states) {
        ModelState st = *s;
        st.gamma.clear();
        st.gamma_at_g.clear();
        for (std::size_t k = 0; k < test_data.slots.size(); ++k) {
            const auto& slot = test_data.slots[k];
            if (slot_map[k] >= 0) {
                st.gamma.push_back(s->gamma[static_cast<std::size_t>(slot_map[k])]);
                st.gamma_at_g.push_back(s->gamma_at_g[static_cast<std::size_t>(slot_map[k])]);
            } else {
                bool at_g = uniform01(rng) < slot.point_mass;
                st.gamma.push_back(at_g ? slot.g : uniform(rng, slot.g, slot.g_upper));
                st.gamma_at_g.push_back(at_g);
            }
        }
        for (const auto& o : test_data.obs) {
            auto c = static_cast<std::size_t>(o.country);
            country_deaths(test_data.countries[c], test_data.window, st.alpha_country[c], st.beta, st.distortion[c],
                           nonaids, total);
            auto m = observation_moments(o, st, nonaids, total);
            double sd = std::sqrt(m.var);
            for (int d = 0; d < draws_per_state; ++d) draws[o.source].push_back(std::exp(m.mean + sd * std_normal(rng)));
        }
    }
    std::vector<PredictiveSummary> out(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (draws[i].empty()) throw InputError("left-out observation row " + std::to_string(test[i].obs.row) +
                                               " is not usable by the model");
        auto q = summarize_values(std::move(draws[i]));
        out[i] = {q.median, q.q10, q.q90};
    }
    return out;
}

std::string_view to_string(Exercise e) { return e == Exercise::random_20pct ? "random_20pct" : "after_2007"; }

double ObservationOutcome::error() const { return (y - predicted) * deaths / births * kMmrScale; }

double ObservationOutcome::relative_error() const { return error() / (predicted * deaths / births * kMmrScale) * 100.0; }

void keep_most_recent(std::vector<ObservationOutcome>& outcomes) {
    std::map<std::string, std::size_t> latest;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto it = latest.find(outcomes[i].country);
        if (it == latest.end()) {
            latest.emplace(outcomes[i].country, i);
            continue;
        }
        const auto& cur = outcomes[it->second];
        const auto& cand = outcomes[i];
        if (cand.ref_year > cur.ref_year || (cand.ref_year == cur.ref_year && cand.row > cur.row)) it->second = i;
    }
    for (auto& o : outcomes) o.used = false;
    for (const auto& [country, i] : latest) outcomes[i].used = true;
}

ValidationReport validation_metrics(Exercise exercise, const std::vector<ObservationOutcome>& observations,
                                    const std::vector<EstimateOutcome>& estimates) {
    ValidationReport report;
    report.exercise = exercise;
    for (MdgGroup g : {MdgGroup::developed, MdgGroup::developing}) {
        GroupMetrics m;
        m.group = g;
        std::vector<double> err, abs_err, rel, abs_rel;
        std::size_t below = 0, above = 0;
        for (const auto& o : observations) {
            if (o.group != g || !o.used) continue;
            double e = o.error();
            double r = o.relative_error();
            err.push_back(e);
            abs_err.push_back(std::fabs(e));
            rel.push_back(r);
            abs_rel.push_back(std::fabs(r));
            if (o.y < o.lower) ++below;
            else if (o.y > o.upper) ++above;
        }
        m.n = err.size();
        if (m.n > 0) {
            m.me = median(err);
            m.mae = median(abs_err);
            m.mre = median(rel);
            m.mare = median(abs_rel);
            m.pct_below = 100.0 * double(below) / double(m.n);
            m.pct_above = 100.0 * double(above) / double(m.n);
            m.pct_inside = 100.0 * double(m.n - below - above) / double(m.n);
        }
        err.clear();
        abs_err.clear();
        rel.clear();
        abs_rel.clear();
        below = above = 0;
        for (const auto& e : estimates) {
            if (e.group != g) continue;
            err.push_back(e.error());
            abs_err.push_back(std::fabs(e.error()));
            rel.push_back(e.relative_error());
            abs_rel.push_back(std::fabs(e.relative_error()));
            if (e.full < e.training_q10) ++below;
            else if (e.full > e.training_q90) ++above;
        }
        m.n_countries = err.size();
        if (!err.empty()) {
            m.est_me = median(err);
            m.est_mae = median(abs_err);
            m.est_mre = median(rel);
            m.est_mare = median(abs_rel);
            m.est_pct_below = 100.0 * double(below) / double(err.size());
            m.est_pct_above = 100.0 * double(above) / double(err.size());
        }
        report.groups.push_back(m);
    }
    return report;
}

ExerciseResult run_exercise(Exercise exercise, const ModelData& full_data, const PriorConfig& prior,
                            const SamplerConfig& sampler, const ValidationConfig& cfg,
                            const PosteriorSamples* full_fit) {
    Split split = exercise == Exercise::random_20pct ? split_random(full_data.source, cfg.fraction, cfg.split_seed)
                                                     : split_recent(full_data.source, cfg.cutoff);
    ExerciseResult result;
    if (split.test.empty()) {
        std::cerr << "warning: exercise " << to_string(exercise) << " has no left-out observations; metrics skipped\n";
        result.report = validation_metrics(exercise, {}, {});
        return result;
    }
    ModelData train_data = with_observations(full_data, split.training);
    Posterior post(train_data, prior);
    PosteriorSamples fit = run_chains(sampler, post);
    auto states = fit.pooled();
    auto pred = predictive_draws(states, train_data, split.test, cfg.predictive_seed);

    for (std::size_t i = 0; i < split.test.size(); ++i) {
        const auto& o = split.test[i].obs;
        int c = full_data.country_index(o.country);
        ObservationOutcome out;
        out.row = o.row;
        out.country = o.country;
        out.group = full_data.countries[static_cast<std::size_t>(c)].group;
        out.ref_year = o.ref_year;
        out.y = o.y;
        out.predicted = pred[i].median;
        out.lower = pred[i].lower;
        out.upper = pred[i].upper;
        out.deaths = o.env_deaths;
        out.births = o.env_births;
        result.observations.push_back(out);
    }
    if (exercise == Exercise::after_2007) {
        keep_most_recent(result.observations);
        if (!full_fit) throw InputError("exercise II needs the full-data fit");
        auto train_table = summarize(states, train_data);
        auto full_table = summarize(*full_fit, full_data);
        for (const auto& cd : full_data.countries) {
            const auto* f = full_table.find(cd.code, cfg.estimate_year, "mmr");
            const auto* t = train_table.find(cd.code, cfg.estimate_year, "mmr");
            if (!f || !t) throw InputError("estimate year outside the estimation window");
            result.estimates.push_back({cd.code, cd.group, f->q.median, t->q.median, t->q.q10, t->q.q90});
        }
    }
    result.report = validation_metrics(exercise, result.observations, result.estimates);
    return result;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    return out;
}

void put(csv::Writer& w, const std::optional<double>& v) {
    if (v) w.field(*v);
    else w.empty();
}

}  // namespace

void write_validation_report(const std::filesystem::path& path, const std::vector<ValidationReport>& reports) {
    auto out = open_out(path);
    csv::Writer w(out);
    w.header({"exercise", "group", "n_obs", "me", "mae", "mre", "mare", "pct_below", "pct_inside", "pct_above",
              "n_countries", "est_me", "est_mae", "est_mre", "est_mare", "est_pct_below", "est_pct_above"});
    for (const auto& r : reports) {
        for (const auto& g : r.groups) {
            w.field(to_string(r.exercise)).field(to_string(g.group)).field(g.n);
            if (g.n > 0) {
                w.field(g.me).field(g.mae).field(g.mre).field(g.mare);
                w.field(g.pct_below).field(g.pct_inside).field(g.pct_above);
            } else {
                for (int k = 0; k < 7; ++k) w.empty();
            }
            w.field(g.n_countries);
            put(w, g.est_me);
            put(w, g.est_mae);
            put(w, g.est_mre);
            put(w, g.est_mare);
            put(w, g.est_pct_below);
            put(w, g.est_pct_above);
            w.end_row();
        }
    }
}

void write_validation_observations(const std::filesystem::path& path, const std::vector<ExerciseResult>& results) {
    auto out = open_out(path);
    csv::Writer w(out);
    w.header({"exercise", "row", "country", "group", "ref_year", "y", "predicted", "lower", "upper", "deaths",
              "births", "used", "error", "relative_error"});
    for (const auto& r : results) {
        for (const auto& o : r.observations) {
            w.field(to_string(r.report.exercise)).field(o.row).field(o.country).field(to_string(o.group));
            w.field(o.ref_year).field(o.y).field(o.predicted).field(o.lower).field(o.upper);
            w.field(o.deaths).field(o.births).field(std::string_view(o.used ? "1" : "0"));
            w.field(o.error()).field(o.relative_error()).end_row();
        }
    }
}

void write_validation_estimates(const std::filesystem::path& path, const std::vector<ExerciseResult>& results) {
    auto out = open_out(path);
    csv::Writer w(out);
    w.header({"exercise", "country", "group", "full_median", "training_median", "training_q10", "training_q90",
              "error", "relative_error"});
    for (const auto& r : results) {
        for (const auto& e : r.estimates) {
            w.field(to_string(r.report.exercise)).field(e.country).field(to_string(e.group));
            w.field(e.full).field(e.training).field(e.training_q10).field(e.training_q90);
            w.field(e.error()).field(e.relative_error()).end_row();
        }
    }
}

}  // namespace bmat
