#include "bmat/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bmat/errors.hpp"
#include "bmat/likelihood.hpp"
#include "bmat/stats.hpp"

namespace bmat {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

double var_of(const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / double(v.size() - 1);
}

bool equal_lengths(const ChainTraces& chains) {
    return std::all_of(chains.begin(), chains.end(),
                       [&](const auto& c) { return c.size() == chains.front().size(); });
}

}  // namespace

std::optional<double> gelman_rubin(const ChainTraces& chains) {
    if (chains.size() < 2 || !equal_lengths(chains) || chains.front().size() < 10) return std::nullopt;
    const double n = double(chains.front().size());
    const double m = double(chains.size());
    std::vector<double> means;
    double w = 0.0;
    for (const auto& c : chains) {
        double mu = mean_of(c);
        double v = var_of(c, mu);
        if (!(v > 0)) return std::nullopt;
        means.push_back(mu);
        w += v / m;
    }
    double b = n * var_of(means, mean_of(means));
    double var_plus = (n - 1.0) / n * w + b / n;
    return std::sqrt(var_plus / w);
}

double effective_sample_size(const ChainTraces& chains) {
    if (chains.empty() || !equal_lengths(chains)) throw InputError("effective sample size needs equal-length chains");
    const std::size_t n = chains.front().size();
    const double m = double(chains.size());
    if (n < 4) return double(n) * m;
    std::vector<double> means, vars;
    for (const auto& c : chains) {
        means.push_back(mean_of(c));
        vars.push_back(var_of(c, means.back()));
    }
    double w = mean_of(vars);
    double b_over_n = chains.size() > 1 ? var_of(means, mean_of(means)) : 0.0;
    double var_plus = double(n - 1) / double(n) * w + b_over_n;
    if (!(var_plus > 0)) return double(n) * m;

    auto rho = [&](std::size_t lag) {
        double acov = 0.0;
        for (std::size_t k = 0; k < chains.size(); ++k) {
            const auto& c = chains[k];
            double s = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i) s += (c[i] - means[k]) * (c[i + lag] - means[k]);
            acov += s / double(n);
        }
        acov /= m;
        return 1.0 - (w - acov) / var_plus;
    };

    // Geyer: sum consecutive pairs while positive, enforcing monotone decrease.
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        double pair = rho(t) + rho(t + 1);
        if (pair <= 0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
    }
    tau = std::max(tau, 1.0 / std::log10(m * double(n)));
    return m * double(n) / tau;
}

double quantile_mcse(const ChainTraces& chains, double p) {
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    std::sort(pooled.begin(), pooled.end());
    double q = quantile_sorted(pooled, p);
    ChainTraces indicator;
    for (const auto& c : chains) {
        std::vector<double> ind;
        for (double x : c) ind.push_back(x <= q ? 1.0 : 0.0);
        indicator.push_back(std::move(ind));
    }
    double ess = effective_sample_size(indicator);
    double sd = std::sqrt(p * (1.0 - p) / ess);
    double lo = quantile_sorted(pooled, std::clamp(p - sd, 0.0, 1.0));
    double hi = quantile_sorted(pooled, std::clamp(p + sd, 0.0, 1.0));
    return 0.5 * (hi - lo);
}

std::vector<PanelCell> default_panel(const ModelData& data, int year) {
    std::vector<PanelCell> panel;
    for (const auto& c : data.countries) panel.push_back({c.code, year});
    return panel;
}

std::vector<MonitoredTrace> monitored_traces(const PosteriorSamples& samples, const ModelData& data,
                                             const std::vector<PanelCell>& panel) {
    using Getter = double (*)(const ModelState&);
    const std::vector<std::pair<std::string, Getter>> scalars = {
        {"alpha_world", [](const ModelState& s) { return s.alpha_world; }},
        {"beta_1", [](const ModelState& s) { return s.beta[0]; }},
        {"beta_2", [](const ModelState& s) { return s.beta[1]; }},
        {"beta_3", [](const ModelState& s) { return s.beta[2]; }},
        {"phi", [](const ModelState& s) { return s.phi; }},
        {"theta", [](const ModelState& s) { return s.theta; }},
        {"sqrt_gamma0", [](const ModelState& s) { return s.sqrt_gamma0; }},
        {"sigma_lambda", [](const ModelState& s) { return s.sigma_lambda; }},
        {"sigma_dhs", [](const ModelState& s) { return s.sigma_dhs; }},
        {"sigma_notdhs", [](const ModelState& s) { return s.sigma_notdhs; }},
    };
    std::vector<MonitoredTrace> out;
    for (const auto& [name, get] : scalars) {
        MonitoredTrace t{name, {}};
        for (const auto& chain : samples.chains) {
            std::vector<double> v;
            for (const auto& s : chain.states) v.push_back(get(s));
            t.chains.push_back(std::move(v));
        }
        out.push_back(std::move(t));
    }
    std::vector<double> nonaids, total;
    for (const auto& cell : panel) {
        int c = data.country_index(cell.country);
        if (c < 0) throw InputError("monitored panel names unknown country '" + cell.country + "'");
        int j = cell.year - data.window.first_year;
        if (j < 0 || j >= data.window.years()) throw InputError("monitored panel year outside the estimation window");
        const auto& cd = data.countries[static_cast<std::size_t>(c)];
        MonitoredTrace t{"mmr[" + cell.country + "," + std::to_string(cell.year) + "]", {}};
        for (const auto& chain : samples.chains) {
            std::vector<double> v;
            for (const auto& s : chain.states) {
                country_deaths(cd, data.window, s.alpha_country[static_cast<std::size_t>(c)], s.beta,
                               s.distortion[static_cast<std::size_t>(c)], nonaids, total);
                v.push_back(total[static_cast<std::size_t>(j)] / cd.births[static_cast<std::size_t>(j)]);
            }
            t.chains.push_back(std::move(v));
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<DiagnosticRow> diagnose(const std::vector<MonitoredTrace>& traces) {
    std::vector<DiagnosticRow> rows;
    for (const auto& t : traces) {
        DiagnosticRow r;
        r.parameter = t.name;
        r.rhat = gelman_rubin(t.chains);
        r.ess = effective_sample_size(t.chains);
        std::vector<double> pooled;
        for (const auto& c : t.chains) pooled.insert(pooled.end(), c.begin(), c.end());
        r.median = median(pooled);
        r.median_mcse = quantile_mcse(t.chains, 0.5);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace bmat
