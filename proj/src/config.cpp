#include "bmat/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "bmat/csv.hpp"
#include "bmat/errors.hpp"

namespace bmat {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

PriorConfig profile(const std::string& name) {
    if (name == "paper") return PriorConfig{};
    if (name == "calibration") return calibration_prior();
    throw InputError("unknown prior profile '" + name + "'");
}

}  // namespace

void RunConfig::validate() const {
    window.validate();
    aids.validate();
    prior.validate();
    sampler.validate();
    if (exercise != "1" && exercise != "2" && exercise != "both") throw InputError("exercise must be 1, 2 or both");
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    cfg.sbc.world = cfg.synth;
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
        entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }

    auto path = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    auto num = [](const std::string& k, const std::string& v) { return csv::parse_double(v, "config key " + k); };
    auto integer = [](const std::string& k, const std::string& v) {
        return static_cast<int>(csv::parse_long(v, "config key " + k));
    };
    auto seed = [](const std::string& k, const std::string& v) {
        long s = csv::parse_long(v, "config key " + k);
        if (s < 0) throw InputError("config key " + k + " must be non-negative");
        return static_cast<std::uint64_t>(s);
    };
    auto boolean = [](const std::string& k, const std::string& v) { return csv::parse_bool(v, "config key " + k); };

    using Setter = std::function<void(const std::string&, const std::string&)>;
    std::map<std::string, Setter> setters;
    auto d = [&](const std::string& key, double& target) {
        setters[key] = [&target, num](const std::string& k, const std::string& v) { target = num(k, v); };
    };
    auto i = [&](const std::string& key, int& target) {
        setters[key] = [&target, integer](const std::string& k, const std::string& v) { target = integer(k, v); };
    };
    auto b = [&](const std::string& key, bool& target) {
        setters[key] = [&target, boolean](const std::string& k, const std::string& v) { target = boolean(k, v); };
    };
    auto u = [&](const std::string& key, std::uint64_t& target) {
        setters[key] = [&target, seed](const std::string& k, const std::string& v) { target = seed(k, v); };
    };

    setters["paths.observations"] = [&](const std::string&, const std::string& v) { cfg.observations = path(v); };
    setters["paths.envelopes"] = [&](const std::string&, const std::string& v) { cfg.envelopes = path(v); };
    setters["paths.output_dir"] = [&](const std::string&, const std::string& v) { cfg.output_dir = path(v); };
    i("window.first_year", cfg.window.first_year);
    i("window.last_year", cfg.window.last_year);
    i("window.anchor_year", cfg.window.anchor_year);
    d("aids.R", cfg.aids.relative_risk);
    d("aids.P_mat_given_apreg", cfg.aids.p_mat_given_aids_preg);
    d("aids.F", cfg.aids.woman_years_per_birth);
    u("preprocess.seed", cfg.preprocess.seed);
    i("preprocess.vr_error_draws", cfg.preprocess.vr_error.draws);
    d("preprocess.vr_multiplier_sd", cfg.preprocess.vr_error.multiplier_sd);
    d("preprocess.type1_error_cap", cfg.preprocess.vr_error.type1_cap);
    d("preprocess.misc_min_sampling_error", cfg.preprocess.misc_min_sampling_error);
    d("preprocess.specialized_max_error", cfg.preprocess.specialized_max_error);

    for (auto [prefix, target] : {std::pair<std::string, PriorConfig*>{"prior.", &cfg.prior}, {"synth.prior.", &cfg.synth.prior}}) {
        PriorConfig& p = *target;
        d(prefix + "alpha_world_mean", p.alpha_world_mean);
        d(prefix + "alpha_world_var", p.alpha_world_var);
        d(prefix + "sigma_country_max", p.sigma_country_max);
        d(prefix + "sigma_region_max", p.sigma_region_max);
        d(prefix + "beta_mean", p.beta_mean);
        d(prefix + "beta_var", p.beta_var);
        d(prefix + "sqrt_gamma0_max", p.sqrt_gamma0_max);
        d(prefix + "sigma_lambda_max", p.sigma_lambda_max);
        d(prefix + "omega_mean_ssa", p.omega_mean_ssa);
        d(prefix + "omega_mean_other", p.omega_mean_other);
        d(prefix + "omega_sd", p.omega_sd);
        d(prefix + "sigma_nonsampling_min", p.sigma_nonsampling_min);
        d(prefix + "sigma_nonsampling_max", p.sigma_nonsampling_max);
    }

    i("sampler.n_chains", cfg.sampler.n_chains);
    i("sampler.n_iterations", cfg.sampler.n_iterations);
    i("sampler.burn_in", cfg.sampler.burn_in);
    i("sampler.thin", cfg.sampler.thin);
    u("sampler.seed", cfg.sampler.seed);
    i("sampler.adapt_batch", cfg.sampler.adapt_batch);
    d("sampler.target_scalar", cfg.sampler.target_scalar);
    d("sampler.target_block", cfg.sampler.target_block);
    i("sampler.max_init_attempts", cfg.sampler.max_init_attempts);
    b("sampler.parallel", cfg.sampler.parallel);
    setters["sampler.frozen"] = [&](const std::string&, const std::string& v) { cfg.sampler.frozen = split_list(v); };

    setters["validation.exercise"] = [&](const std::string&, const std::string& v) { cfg.exercise = v; };
    d("validation.fraction", cfg.validation.fraction);
    u("validation.split_seed", cfg.validation.split_seed);
    d("validation.cutoff", cfg.validation.cutoff);
    i("validation.estimate_year", cfg.validation.estimate_year);
    u("validation.predictive_seed", cfg.validation.predictive_seed);

    i("diagnostics.panel_year", cfg.panel_year);
    setters["diagnostics.panel"] = [&](const std::string& k, const std::string& v) {
        cfg.panel.clear();
        for (const auto& item : split_list(v)) {
            auto colon = item.find(':');
            if (colon == std::string::npos) throw InputError("config key " + k + ": expected COUNTRY:YEAR items");
            cfg.panel.push_back({item.substr(0, colon), integer(k, item.substr(colon + 1))});
        }
    };

    auto& sy = cfg.synth;
    i("synth.n_countries", sy.n_countries);
    i("synth.n_regions", sy.n_regions);
    i("synth.n_empty", sy.n_empty);
    i("synth.first_year", sy.first_year);
    i("synth.last_year", sy.last_year);
    i("synth.anchor_year", sy.anchor_year);
    i("synth.vr_every", sy.vr_every);
    i("synth.vr_first_year", sy.vr_first_year);
    i("synth.specialized_per_country", sy.specialized_per_country);
    i("synth.dhs_per_country", sy.dhs_per_country);
    i("synth.misc_per_country", sy.misc_per_country);
    b("synth.exact", sy.exact);
    b("synth.zero_noise", sy.zero_noise);
    b("synth.flat_distortion", sy.flat_distortion);
    b("synth.with_aids", sy.with_aids);
    u("synth.seed", cfg.synth_seed);

    i("sbc.replications", cfg.sbc.replications);
    u("sbc.seed", cfg.sbc.seed);
    i("sbc.rank_draws", cfg.sbc.rank_draws);
    i("sbc.bins", cfg.sbc.bins);
    i("sbc.coverage_year", cfg.sbc.coverage_year);
    d("sbc.fit_sigma_scale", cfg.sbc.fit_sigma_scale);
    i("sbc.threads", cfg.sbc.threads);

    // Profiles replace whole prior blocks, so they apply before individual keys.
    for (const auto& [k, v] : entries) {
        if (k == "prior.profile") cfg.prior = profile(v);
        else if (k == "synth.prior_profile") cfg.synth.prior = profile(v);
    }
    for (const auto& [k, v] : entries) {
        if (k == "prior.profile" || k == "synth.prior_profile") continue;
        auto it = setters.find(k);
        if (it == setters.end()) throw InputError("unknown config key '" + k + "'");
        it->second(k, v);
    }
    cfg.preprocess.first_year = cfg.window.first_year;
    cfg.preprocess.last_year = cfg.window.last_year;
    cfg.sbc.world = cfg.synth;
    cfg.sbc.sampler = cfg.sampler;
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

}  // namespace bmat
