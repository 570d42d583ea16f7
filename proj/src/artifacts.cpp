#include "bmat/artifacts.hpp"

#include <fstream>
#include <map>

#include "bmat/csv.hpp"
#include "bmat/errors.hpp"

namespace bmat {

std::vector<std::pair<std::string, double>> state_parameters(const ModelState& s, const ModelData& data) {
    std::vector<std::pair<std::string, double>> p;
    p.emplace_back("alpha_world", s.alpha_world);
    p.emplace_back("beta_1", s.beta[0]);
    p.emplace_back("beta_2", s.beta[1]);
    p.emplace_back("beta_3", s.beta[2]);
    p.emplace_back("sigma_country", s.sigma_country);
    p.emplace_back("sigma_region", s.sigma_region);
    p.emplace_back("phi", s.phi);
    p.emplace_back("theta", s.theta);
    p.emplace_back("sqrt_gamma0", s.sqrt_gamma0);
    p.emplace_back("sigma_lambda", s.sigma_lambda);
    p.emplace_back("sigma_dhs", s.sigma_dhs);
    p.emplace_back("sigma_notdhs", s.sigma_notdhs);
    for (std::size_t r = 0; r < s.alpha_region.size(); ++r) {
        p.emplace_back("alpha_region[" + data.regions[r] + "]", s.alpha_region[r]);
    }
    const int first = data.window.first_year;
    for (std::size_t c = 0; c < s.alpha_country.size(); ++c) {
        const auto& code = data.countries[c].code;
        p.emplace_back("alpha_country[" + code + "]", s.alpha_country[c]);
        p.emplace_back("lambda[" + code + "]", s.lambda[c]);
        p.emplace_back("omega[" + code + "]", s.omega[c]);
        p.emplace_back("distortion[" + code + "," + std::to_string(first) + "]", s.distortion[c][0]);
        for (std::size_t t = 0; t < s.innovation[c].size(); ++t) {
            p.emplace_back("innovation[" + code + "," + std::to_string(first + static_cast<int>(t)) + "]",
                           s.innovation[c][t]);
        }
    }
    for (std::size_t k = 0; k < data.slots.size(); ++k) {
        const auto& slot = data.slots[k];
        std::string key = data.countries[static_cast<std::size_t>(slot.country)].code + "," + std::to_string(slot.year);
        p.emplace_back("gamma[" + key + "]", s.gamma[k]);
        p.emplace_back("gamma_at_g[" + key + "]", s.gamma_at_g[k]);
    }
    return p;
}

void write_samples(const std::filesystem::path& path, const PosteriorSamples& samples, const ModelData& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header({"chain", "iteration", "parameter", "value"});
    for (std::size_t k = 0; k < samples.chains.size(); ++k) {
        const auto& chain = samples.chains[k];
        for (std::size_t i = 0; i < chain.states.size(); ++i) {
            for (const auto& [name, value] : state_parameters(chain.states[i], data)) {
                w.field(k).field(chain.iterations[i]).field(name).field(value).end_row();
            }
        }
    }
}

PosteriorSamples read_samples(const std::filesystem::path& path, const ModelData& data) {
    if (!std::filesystem::exists(path)) throw InputError("missing fit artifact: " + path.string());
    auto table = csv::read(path);
    csv::require_columns(table, {"chain", "iteration", "parameter", "value"}, path.filename().string());
    const auto cc = table.column("chain"), ci = table.column("iteration"), cp = table.column("parameter"),
               cv = table.column("value");

    const ModelState shape = ModelState::shaped(data);
    auto names = state_parameters(shape, data);
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < names.size(); ++k) index.emplace(names[k].first, k);

    PosteriorSamples samples;
    std::vector<double> values(names.size());
    std::vector<bool> seen(names.size(), false);
    long cur_chain = -1, cur_iter = -1;
    std::size_t n_seen = 0;

    auto flush = [&]() {
        if (cur_chain < 0) return;
        if (n_seen != names.size()) throw InputError("samples file has an incomplete state");
        ModelState s = shape;
        std::size_t k = 0;
        s.alpha_world = values[k++];
        for (auto& b : s.beta) b = values[k++];
        s.sigma_country = values[k++];
        s.sigma_region = values[k++];
        s.phi = values[k++];
        s.theta = values[k++];
        s.sqrt_gamma0 = values[k++];
        s.sigma_lambda = values[k++];
        s.sigma_dhs = values[k++];
        s.sigma_notdhs = values[k++];
        for (auto& ar : s.alpha_region) ar = values[k++];
        for (std::size_t c = 0; c < s.alpha_country.size(); ++c) {
            s.alpha_country[c] = values[k++];
            s.lambda[c] = values[k++];
            s.omega[c] = values[k++];
            s.distortion[c][0] = values[k++];
            for (auto& e : s.innovation[c]) e = values[k++];
        }
        for (std::size_t j = 0; j < s.gamma.size(); ++j) {
            s.gamma[j] = values[k++];
            s.gamma_at_g[j] = values[k++] != 0.0;
        }
        s.propagate_all();
        auto& chain = samples.chains[static_cast<std::size_t>(cur_chain)];
        chain.iterations.push_back(static_cast<int>(cur_iter));
        chain.states.push_back(std::move(s));
        std::fill(seen.begin(), seen.end(), false);
        n_seen = 0;
    };

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& f = table.rows[r];
        long chain = csv::parse_long(f[cc], "samples chain");
        long iter = csv::parse_long(f[ci], "samples iteration");
        if (chain != cur_chain || iter != cur_iter) {
            flush();
            cur_chain = chain;
            cur_iter = iter;
            if (chain < 0) throw InputError("negative chain index in samples file");
            if (static_cast<std::size_t>(chain) >= samples.chains.size()) samples.chains.resize(static_cast<std::size_t>(chain) + 1);
        }
        auto it = index.find(f[cp]);
        if (it == index.end()) throw InputError("samples file names unknown parameter '" + f[cp] + "'");
        if (seen[it->second]) throw InputError("samples file repeats parameter '" + f[cp] + "'");
        seen[it->second] = true;
        ++n_seen;
        values[it->second] = csv::parse_double(f[cv], "samples value");
    }
    flush();
    if (samples.total() == 0) throw InputError("samples file holds no states");
    return samples;
}

void write_diagnostics(const std::filesystem::path& path, const std::vector<DiagnosticRow>& rows,
                       const PosteriorSamples& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    csv::Writer w(out);
    w.header({"kind", "name", "chain", "rhat", "ess", "median", "median_mcse", "burn_in_acceptance", "acceptance",
              "scale_at_burn_in_end", "final_scale"});
    for (const auto& r : rows) {
        w.field(std::string_view("monitored")).field(r.parameter).empty();
        if (r.rhat) w.field(*r.rhat);
        else w.field(std::string_view("undefined"));
        w.field(r.ess).field(r.median).field(r.median_mcse);
        for (int k = 0; k < 4; ++k) w.empty();
        w.end_row();
    }
    for (std::size_t k = 0; k < samples.chains.size(); ++k) {
        for (const auto& a : samples.chains[k].acceptance) {
            w.field(std::string_view("proposal")).field(a.name).field(k);
            for (int j = 0; j < 4; ++j) w.empty();
            if (a.burn_in_tries > 0) w.field(double(a.burn_in_accepts) / double(a.burn_in_tries));
            else w.empty();
            if (a.tries > 0) w.field(double(a.accepts) / double(a.tries));
            else w.empty();
            w.field(a.scale_at_burn_in_end).field(a.final_scale).end_row();
        }
    }
}

}  // namespace bmat
