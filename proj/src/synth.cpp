#include "bmat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bmat/arma.hpp"
#include "bmat/csv.hpp"
#include "bmat/errors.hpp"
#include "bmat/ingest.hpp"
#include "bmat/stats.hpp"

namespace bmat {

namespace {

struct SyntheticObs {
    int country = 0;
    double start = 0, end = 0;
    Definition definition = Definition::maternal;
    SourceType source = SourceType::vr;
    bool is_dhs = false;
    double sampling_error = 0.0;
    std::string provenance;
};

void check_override(const std::optional<double>& v, double lo, double hi, const char* name) {
    if (v && !(*v > lo && *v < hi)) throw InputError(std::string("override outside prior support: ") + name);
}

double pick(const std::optional<double>& v, double drawn) { return v ? *v : drawn; }

// Aggregate a yearly series over [start, end) with the proration weights.
double aggregate(const std::vector<double>& yearly, int first_year, double start, double end) {
    double total = 0.0;
    for (auto [year, frac] : year_overlaps(start, end)) total += frac * yearly[static_cast<std::size_t>(year - first_year)];
    return total;
}

}  // namespace

void SynthConfig::validate() const {
    if (n_countries < 1 || n_regions < 1 || n_regions > n_countries) throw InputError("invalid synthetic world size");
    if (n_empty < 0 || n_empty > n_countries) throw InputError("invalid number of empty countries");
    if (last_year <= first_year || anchor_year < first_year || anchor_year > last_year) {
        throw InputError("invalid synthetic year span");
    }
    if (vr_every < 1) throw InputError("vr_every must be at least 1");
    if (!(vr_point_mass >= 0 && vr_point_mass <= 1 && vr_g_upper > vr_g && vr_g > 0)) {
        throw InputError("invalid synthetic VR adjustment prior");
    }
    prior.validate();
    const auto& t = truth;
    check_override(t.sigma_country, 0, prior.sigma_country_max, "sigma_country");
    check_override(t.sigma_region, 0, prior.sigma_region_max, "sigma_region");
    check_override(t.phi, 0, 1, "phi");
    check_override(t.theta, -1, 0, "theta");
    check_override(t.sqrt_gamma0, 0, prior.sqrt_gamma0_max, "sqrt_gamma0");
    check_override(t.sigma_lambda, 0, prior.sigma_lambda_max, "sigma_lambda");
    check_override(t.sigma_dhs, prior.sigma_nonsampling_min, prior.sigma_nonsampling_max, "sigma_dhs");
    check_override(t.sigma_notdhs, prior.sigma_nonsampling_min, prior.sigma_nonsampling_max, "sigma_notdhs");
}

PriorConfig calibration_prior() {
    PriorConfig p;
    p.alpha_world_mean = 2.0;
    p.alpha_world_var = 0.25 * 0.25;
    p.sigma_country_max = 0.5;
    p.sigma_region_max = 0.3;
    p.beta_mean = 0.5;
    p.beta_var = 0.1 * 0.1;
    return p;
}

SyntheticWorld generate_world(const SynthConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    SyntheticWorld world;
    world.window = {cfg.first_year, cfg.last_year, cfg.anchor_year};
    const int years = cfg.last_year - cfg.first_year + 1;

    // Envelopes and covariates.
    std::vector<CountryYearEnvelope> rows;
    auto code = [](int k) {
        std::string s = std::to_string(k + 1);
        return "C" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
    };
    for (int k = 0; k < cfg.n_countries; ++k) {
        int region = k % cfg.n_regions;
        bool vr_country = k % cfg.vr_every == 0;
        bool ssa = region == 0 && cfg.n_regions > 1;
        double women = std::exp(uniform(rng, std::log(2e5), std::log(5e6)));
        double death_rate = uniform(rng, 0.002, 0.006);
        double log_gdp = vr_country ? uniform(rng, std::log(5000), std::log(30000)) : uniform(rng, std::log(600), std::log(6000));
        double log_gfr = vr_country ? uniform(rng, std::log(0.04), std::log(0.08)) : uniform(rng, std::log(0.08), std::log(0.2));
        double sab_a = vr_country ? uniform(rng, 1.5, 3.0) : uniform(rng, -1.5, 1.0);
        double sab_b = uniform(rng, 0.02, 0.1);
        double aids_peak = (cfg.with_aids && ssa) ? uniform(rng, 0.02, 0.25) : 0.0;
        for (int j = 0; j < years; ++j) {
            int year = cfg.first_year + j;
            CountryYearEnvelope e;
            e.country = code(k);
            e.year = year;
            e.region = "R" + std::to_string(region + 1);
            e.is_ssa = ssa;
            e.mdg_group = vr_country ? MdgGroup::developed : MdgGroup::developing;
            e.gdp = std::exp(log_gdp);
            e.gfr = std::exp(log_gfr);
            e.sab = 1.0 / (1.0 + std::exp(-(sab_a + sab_b * j)));
            e.births = women * e.gfr;
            e.deaths = women * death_rate * (1.0 - 0.005 * j);
            double aids_share = aids_peak * std::exp(-0.5 * std::pow((year - 2002.0) / 6.0, 2));
            e.aids_deaths = e.deaths * aids_share;
            rows.push_back(e);
            log_gdp += 0.02 + 0.03 * std_normal(rng);
            log_gfr = std::clamp(log_gfr - 0.015 + 0.01 * std_normal(rng), std::log(0.02), std::log(0.25));
        }
    }
    world.envelopes = EnvelopeTable(rows);
    ModelData base = build_model_data({}, world.envelopes, world.window, AidsParams{});

    // Observation layout (independent of the truth).
    std::vector<SyntheticObs> layout;
    const int n_with_data = cfg.n_countries - cfg.n_empty;
    for (int k = 0; k < n_with_data; ++k) {
        if (k % cfg.vr_every == 0) {
            for (int year = std::max(cfg.vr_first_year, cfg.first_year); year <= cfg.last_year; ++year) {
                layout.push_back({k, double(year), double(year + 1), Definition::maternal, SourceType::vr, false, 0.0,
                                  cfg.exact ? "vr:lognormal" : "vr:binomial"});
            }
            continue;
        }
        auto random_year = [&](int lo) {
            return std::uniform_int_distribution<int>(std::min(lo, cfg.last_year), cfg.last_year)(rng);
        };
        for (int i = 0; i < cfg.specialized_per_country; ++i) {
            int y = random_year(cfg.first_year + 2);
            layout.push_back({k, double(y), double(y + 1), Definition::maternal, SourceType::specialized_study, false,
                              cfg.specialized_error, "specialized:lognormal"});
        }
        for (int i = 0; i < cfg.dhs_per_country; ++i) {
            int y = random_year(cfg.first_year + 5);
            layout.push_back({k, double(y - 4), double(y + 1), Definition::pregnancy_related,
                              SourceType::misc_pregnancy_related, true, cfg.dhs_sampling_error, "dhs:lognormal"});
        }
        for (int i = 0; i < cfg.misc_per_country; ++i) {
            int y = random_year(cfg.first_year + 2);
            layout.push_back({k, double(y - 1), double(y + 1), Definition::maternal, SourceType::misc_maternal, false,
                              cfg.misc_sampling_error, "misc:lognormal"});
        }
    }

    const auto& p = cfg.prior;
    const auto& o = cfg.truth;
    const auto nc = static_cast<std::size_t>(cfg.n_countries);
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        ModelState s = ModelState::shaped(base);
        s.alpha_world = pick(o.alpha_world, p.alpha_world_mean + std::sqrt(p.alpha_world_var) * std_normal(rng));
        s.sigma_region = pick(o.sigma_region, uniform(rng, 0, p.sigma_region_max));
        s.sigma_country = pick(o.sigma_country, uniform(rng, 0, p.sigma_country_max));
        for (auto& ar : s.alpha_region) ar = s.alpha_world + s.sigma_region * std_normal(rng);
        for (std::size_t c = 0; c < nc; ++c) {
            s.alpha_country[c] = s.alpha_region[static_cast<std::size_t>(base.countries[c].region)] +
                                 s.sigma_country * std_normal(rng);
        }
        const double beta_sd = std::sqrt(p.beta_var);
        s.beta[0] = pick(o.beta_1, p.beta_mean + beta_sd * std_normal(rng));
        s.beta[1] = pick(o.beta_2, p.beta_mean + beta_sd * std_normal(rng));
        s.beta[2] = pick(o.beta_3, p.beta_mean + beta_sd * std_normal(rng));
        s.phi = pick(o.phi, uniform(rng, 0, 1));
        s.theta = pick(o.theta, uniform(rng, -1, 0));
        s.sqrt_gamma0 = pick(o.sqrt_gamma0, uniform(rng, 0, p.sqrt_gamma0_max));
        s.sigma_lambda = pick(o.sigma_lambda, uniform(rng, 0, p.sigma_lambda_max));
        s.sigma_dhs = pick(o.sigma_dhs, uniform(rng, p.sigma_nonsampling_min, p.sigma_nonsampling_max));
        s.sigma_notdhs = pick(o.sigma_notdhs, uniform(rng, p.sigma_nonsampling_min, p.sigma_nonsampling_max));
        for (std::size_t c = 0; c < nc; ++c) {
            s.lambda[c] = truncated_normal_draw(rng, 0.0, s.sigma_lambda, p.lambda_lower, p.lambda_upper);
            s.omega[c] = truncated_normal_draw(rng, p.omega_mean(base.countries[c].is_ssa), p.omega_sd, 0.0, 1.0);
            if (cfg.flat_distortion) continue;
            double sigma = std::sqrt(s.country_scale(c).sigma2);
            simulate_distortion(rng, s.phi, s.theta, sigma, s.distortion[c], s.innovation[c]);
        }

        // Truth and constraint check.
        bool ok = true;
        std::vector<std::vector<double>> nonaids(nc), total(nc);
        world.true_mmr.assign(nc, {});
        for (std::size_t c = 0; c < nc; ++c) {
            const auto& cd = base.countries[c];
            ok = ok && country_deaths(cd, world.window, s.alpha_country[c], s.beta, s.distortion[c], nonaids[c], total[c]);
            for (int j = 0; j < years; ++j) world.true_mmr[c].push_back(total[c][j] / cd.births[j]);
        }
        if (!ok) continue;

        // Observations.
        world.records.clear();
        world.processed.clear();
        world.provenance.clear();
        std::vector<GammaSlot> slots;
        std::vector<double> slot_gamma;
        std::vector<std::uint8_t> slot_at_g;
        auto noise = [&]() { return cfg.zero_noise ? 0.0 : std_normal(rng); };
        std::size_t row = 0;
        for (const auto& l : layout) {
            auto c = static_cast<std::size_t>(l.country);
            const auto& cd = base.countries[c];
            const std::string& country = cd.code;
            double deaths = aggregate(cd.deaths, cfg.first_year, l.start, l.end);
            double phi_i = aggregate(total[c], cfg.first_year, l.start, l.end);
            double gamma = 1.0, sd = 0.0;
            double big_gamma = phi_i;
            if (l.definition == Definition::pregnancy_related) {
                big_gamma = aggregate(nonaids[c], cfg.first_year, l.start, l.end) / s.omega[c] +
                            aggregate(cd.aids_preg, cfg.first_year, l.start, l.end);
            }
            GammaSlot slot{l.country, static_cast<int>(l.start), cfg.vr_g, cfg.vr_g_upper, cfg.vr_point_mass};
            switch (l.source) {
                case SourceType::vr:
                    if (cfg.exact) {
                        bool at_g = uniform01(rng) < slot.point_mass;
                        gamma = at_g ? slot.g : uniform(rng, slot.g, slot.g_upper);
                        slots.push_back(slot);
                        slot_gamma.push_back(gamma);
                        slot_at_g.push_back(at_g);
                        sd = cfg.vr_error;
                    } else {
                        gamma = kDefaultAdjustment;
                    }
                    break;
                case SourceType::specialized_study:
                    gamma = kSpecializedUnderreporting;
                    sd = l.sampling_error;
                    break;
                default: {
                    gamma = kMiscUnderreporting;
                    double ns = l.is_dhs ? s.sigma_dhs : s.sigma_notdhs;
                    sd = std::sqrt(l.sampling_error * l.sampling_error + ns * ns);
                    break;
                }
            }
            double mean_pm = big_gamma / gamma / deaths;
            ++row;
            RawRecord r;
            r.row = row;
            r.country = country;
            r.period_start = l.start;
            r.period_end = l.end;
            r.definition = l.definition;
            r.source_type = l.source;
            r.is_dhs = l.is_dhs;
            double y = 0.0;
            if (l.source == SourceType::vr && !cfg.exact) {
                double completeness = uniform(rng, 0.9, 1.0);
                double vr_deaths = std::round(deaths * completeness);
                double m = cfg.zero_noise ? vr_deaths * mean_pm
                                          : double(std::binomial_distribution<long>(static_cast<long>(vr_deaths), mean_pm)(rng));
                r.maternal_deaths = m;
                r.all_cause_deaths = vr_deaths;
                r.prop_ill_defined = uniform(rng, 0.02, 0.1);
                y = m / vr_deaths;
            } else {
                y = std::exp(std::log(mean_pm) + sd * noise());
                r.reported_pm = y;
                if (l.source != SourceType::vr) r.sampling_error = l.sampling_error;
            }
            if (!(y < 1.0)) {
                ok = false;
                break;
            }
            world.records.push_back(r);
            world.provenance.push_back(l.provenance + (cfg.zero_noise ? ":noiseless" : ""));

            if (cfg.exact) {
                auto env = aggregate_envelope(world.envelopes, country, l.start, l.end);
                ProcessedObservation po;
                Observation& ob = po.obs;
                ob.index = world.processed.size();
                ob.row = row;
                ob.country = country;
                ob.start = l.start;
                ob.end = l.end;
                ob.ref_year = 0.5 * (l.start + l.end);
                ob.definition = l.definition;
                ob.source_type = l.source;
                ob.is_dhs = l.is_dhs;
                ob.vr_type = l.source == SourceType::vr ? VrType::II : VrType::excluded;
                ob.y = y;
                ob.route = PmRoute::reported_pm;
                ob.reported_pm = y;
                if (l.source != SourceType::vr) ob.sampling_error = l.sampling_error;
                ob.env_deaths = env.deaths;
                ob.env_births = env.births;
                ob.env_aids = env.aids_deaths;
                po.sigma = l.source == SourceType::vr ? cfg.vr_error : l.sampling_error;
                if (l.source == SourceType::vr) {
                    po.usability = 0.7;
                    po.g = slot.g;
                    po.g_upper = slot.g_upper;
                    po.point_mass = slot.point_mass;
                }
                world.processed.push_back(std::move(po));
            }
        }
        if (!ok) continue;

        if (cfg.exact) {
            world.data = build_model_data(world.processed, world.envelopes, world.window, AidsParams{});
            // Align the true slot values with the model's slot order.
            s.gamma.clear();
            s.gamma_at_g.clear();
            for (const auto& ms : world.data.slots) {
                for (std::size_t k = 0; k < slots.size(); ++k) {
                    if (slots[k].country == ms.country && slots[k].year == ms.year) {
                        s.gamma.push_back(slot_gamma[k]);
                        s.gamma_at_g.push_back(slot_at_g[k]);
                        break;
                    }
                }
            }
        } else {
            world.data = base;
        }
        world.truth = std::move(s);
        return world;
    }
    throw NumericalError("could not draw a synthetic world satisfying the model constraints");
}

void write_world(const std::filesystem::path& dir, const SyntheticWorld& world) {
    std::filesystem::create_directories(dir);
    write_raw_records(dir / "observations.csv", world.records);
    write_envelopes(dir / "envelopes.csv", world.envelopes);

    auto open = [](const std::filesystem::path& path) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InputError("cannot write " + path.string());
        return out;
    };
    const auto& s = world.truth;
    const auto& data = world.data;
    {
        auto out = open(dir / "truth.csv");
        csv::Writer w(out);
        w.header({"parameter", "value"});
        auto put = [&](const std::string& name, double v) { w.field(name).field(v).end_row(); };
        put("alpha_world", s.alpha_world);
        put("beta_1", s.beta[0]);
        put("beta_2", s.beta[1]);
        put("beta_3", s.beta[2]);
        put("sigma_country", s.sigma_country);
        put("sigma_region", s.sigma_region);
        put("phi", s.phi);
        put("theta", s.theta);
        put("sqrt_gamma0", s.sqrt_gamma0);
        put("sigma_lambda", s.sigma_lambda);
        put("sigma_dhs", s.sigma_dhs);
        put("sigma_notdhs", s.sigma_notdhs);
        for (std::size_t r = 0; r < s.alpha_region.size(); ++r) put("alpha_region[" + data.regions[r] + "]", s.alpha_region[r]);
        for (std::size_t c = 0; c < s.alpha_country.size(); ++c) {
            const auto& code = data.countries[c].code;
            put("alpha_country[" + code + "]", s.alpha_country[c]);
            put("lambda[" + code + "]", s.lambda[c]);
            put("omega[" + code + "]", s.omega[c]);
        }
    }
    {
        auto out = open(dir / "truth_mmr.csv");
        csv::Writer w(out);
        w.header({"country", "year", "mmr", "distortion"});
        for (std::size_t c = 0; c < world.true_mmr.size(); ++c) {
            for (std::size_t j = 0; j < world.true_mmr[c].size(); ++j) {
                w.field(data.countries[c].code).field(world.window.first_year + static_cast<int>(j));
                w.field(world.true_mmr[c][j] * 1e5);
                if (j < s.distortion[c].size()) w.field(s.distortion[c][j]);
                else w.empty();
                w.end_row();
            }
        }
    }
    {
        auto out = open(dir / "provenance.csv");
        csv::Writer w(out);
        w.header({"row", "country", "data_model"});
        for (std::size_t i = 0; i < world.records.size(); ++i) {
            w.field(world.records[i].row).field(world.records[i].country).field(world.provenance[i]).end_row();
        }
    }
}

}  // namespace bmat
