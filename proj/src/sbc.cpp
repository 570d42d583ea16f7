#include "bmat/sbc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "bmat/csv.hpp"
#include "bmat/diagnostics.hpp"
#include "bmat/errors.hpp"
#include "bmat/vr_preprocess.hpp"

namespace bmat {

namespace {

double parameter_value(const ModelState& s, const std::string& name) {
    if (name == "alpha_world") return s.alpha_world;
    if (name == "beta_1") return s.beta[0];
    if (name == "beta_2") return s.beta[1];
    if (name == "beta_3") return s.beta[2];
    if (name == "phi") return s.phi;
    if (name == "theta") return s.theta;
    if (name == "sqrt_gamma0") return s.sqrt_gamma0;
    if (name == "sigma_dhs") return s.sigma_dhs;
    if (name == "sigma_notdhs") return s.sigma_notdhs;
    throw InputError("unknown calibration parameter " + name);
}

}  // namespace

const std::vector<std::string>& sbc_parameters() {
    static const std::vector<std::string> names = {"alpha_world", "beta_1", "beta_2",   "beta_3",      "phi",
                                                   "theta",       "sqrt_gamma0", "sigma_dhs", "sigma_notdhs"};
    return names;
}

SbcReplication sbc_replication(const SbcConfig& cfg, int index) {
    SbcReplication rep;
    rep.index = index;
    rep.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
    SynthConfig wc = cfg.world;
    wc.exact = true;
    SyntheticWorld world = generate_world(wc, rep.seed);

    ModelData data = world.data;
    if (cfg.fit_sigma_scale != 1.0) {
        auto obs = data.source;
        for (auto& o : obs) o.sigma *= cfg.fit_sigma_scale;
        data = with_observations(data, obs);
    }
    Posterior post(data, wc.prior);
    SamplerConfig sc = cfg.sampler;
    sc.seed = mix_seed(rep.seed, 0x5bc);
    sc.parallel = false;
    PosteriorSamples samples = run_chains(sc, post);

    auto traces = monitored_traces(samples, data, default_panel(data, cfg.coverage_year));
    rep.converged = true;
    for (const auto& t : traces) {
        auto r = gelman_rubin(t.chains);
        if (!r) continue;
        rep.max_rhat = std::max(rep.max_rhat, *r);
        if (!(*r < cfg.rhat_threshold)) rep.converged = false;
    }

    auto pooled = samples.pooled();
    const std::size_t n = pooled.size();
    const auto l = static_cast<std::size_t>(cfg.rank_draws);
    std::vector<const ModelState*> thinned;
    for (std::size_t i = 0; i < l; ++i) thinned.push_back(pooled[n == 1 ? 0 : i * (n - 1) / (l - 1)]);
    for (const auto& name : sbc_parameters()) {
        double truth = parameter_value(world.truth, name);
        int rank = 0;
        for (const auto* s : thinned) rank += parameter_value(*s, name) < truth;
        rep.ranks[name] = rank;
    }

    int j = cfg.coverage_year - data.window.first_year;
    std::vector<double> nonaids, total;
    for (std::size_t c = 0; c < data.countries.size(); ++c) {
        const auto& cd = data.countries[c];
        std::vector<double> draws;
        for (const auto* s : pooled) {
            country_deaths(cd, data.window, s->alpha_country[c], s->beta, s->distortion[c], nonaids, total);
            draws.push_back(total[static_cast<std::size_t>(j)] / cd.births[static_cast<std::size_t>(j)]);
        }
        std::sort(draws.begin(), draws.end());
        double lo = quantile_sorted(draws, 0.1), hi = quantile_sorted(draws, 0.9);
        double truth = world.true_mmr[c][static_cast<std::size_t>(j)];
        rep.covered += truth >= lo && truth <= hi;
        ++rep.cells;
    }
    return rep;
}

SbcReport sbc_assemble(const SbcConfig& cfg, std::vector<SbcReplication> reps) {
    SbcReport report;
    report.config = cfg;
    report.replications = std::move(reps);
    int covered = 0, cells = 0;
    for (const auto& r : report.replications) {
        report.converged += r.converged;
        covered += r.covered;
        cells += r.cells;
    }
    report.coverage = cells > 0 ? double(covered) / double(cells) : 0.0;
    const int levels = cfg.rank_draws + 1;
    for (const auto& name : sbc_parameters()) {
        SbcParameterSummary ps;
        ps.parameter = name;
        ps.histogram.assign(static_cast<std::size_t>(cfg.bins), 0);
        for (const auto& r : report.replications) {
            int bin = r.ranks.at(name) * cfg.bins / levels;
            ++ps.histogram[static_cast<std::size_t>(bin)];
        }
        if (report.replications.size() >= 2) {
            double expected = double(report.replications.size()) / cfg.bins;
            double chi = 0.0;
            for (int h : ps.histogram) chi += (h - expected) * (h - expected) / expected;
            ps.chi_square = chi;
            ps.p_value = chi_square_sf(chi, cfg.bins - 1);
        }
        report.parameters.push_back(std::move(ps));
    }
    return report;
}

SbcReport sbc_run(const SbcConfig& cfg) {
    if (cfg.replications < 1) throw InputError("calibration needs at least one replication");
    if (cfg.rank_draws < 2 || cfg.bins < 2 || (cfg.rank_draws + 1) % cfg.bins != 0) {
        throw InputError("rank_draws + 1 must be a multiple of the number of bins");
    }
    if (cfg.sampler.n_chains * cfg.sampler.retained_per_chain() < cfg.rank_draws) {
        throw InputError("calibration fit retains fewer draws than rank_draws");
    }
    std::vector<SbcReplication> reps(static_cast<std::size_t>(cfg.replications));
    int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, cfg.replications);
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    auto worker = [&](int t) {
        try {
            for (int i = next++; i < cfg.replications; i = next++) reps[static_cast<std::size_t>(i)] = sbc_replication(cfg, i);
        } catch (...) {
            errors[static_cast<std::size_t>(t)] = std::current_exception();
            next = cfg.replications;
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return sbc_assemble(cfg, std::move(reps));
}

void write_sbc(const std::filesystem::path& dir, const SbcReport& report) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "sbc_ranks.csv", std::ios::binary);
        if (!out) throw InputError("cannot write sbc_ranks.csv");
        csv::Writer w(out);
        std::vector<std::string> header = {"replication", "seed", "converged", "max_rhat", "covered", "cells"};
        for (const auto& p : sbc_parameters()) header.push_back(p);
        w.header(header);
        for (const auto& r : report.replications) {
            w.field(r.index).field(std::to_string(r.seed)).field(std::string_view(r.converged ? "1" : "0"));
            w.field(r.max_rhat).field(r.covered).field(r.cells);
            for (const auto& p : sbc_parameters()) w.field(r.ranks.at(p));
            w.end_row();
        }
    }
    {
        std::ofstream out(dir / "sbc_summary.csv", std::ios::binary);
        if (!out) throw InputError("cannot write sbc_summary.csv");
        csv::Writer w(out);
        std::vector<std::string> header = {"parameter", "chi_square", "p_value"};
        for (int b = 0; b < report.config.bins; ++b) header.push_back("bin_" + std::to_string(b + 1));
        w.header(header);
        for (const auto& p : report.parameters) {
            w.field(p.parameter);
            if (p.chi_square) w.field(*p.chi_square).field(*p.p_value);
            else w.empty().empty();
            for (int h : p.histogram) w.field(h);
            w.end_row();
        }
        w.field(std::string_view("converged_replications")).field(static_cast<long>(report.converged)).empty();
        for (int b = 0; b < report.config.bins; ++b) w.empty();
        w.end_row();
        w.field(std::string_view("coverage_80")).field(report.coverage).empty();
        for (int b = 0; b < report.config.bins; ++b) w.empty();
        w.end_row();
    }
}

}  // namespace bmat
