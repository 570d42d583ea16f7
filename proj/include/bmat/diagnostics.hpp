#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bmat/model_data.hpp"
#include "bmat/sampler.hpp"

namespace bmat {

using ChainTraces = std::vector<std::vector<double>>;

// Classic potential scale reduction factor. Empty when any chain has zero variance or
// fewer than two chains / ten draws are given.
std::optional<double> gelman_rubin(const ChainTraces& chains);

// Effective sample size from the combined-chain autocorrelation with Geyer's initial
// monotone sequence truncation.
double effective_sample_size(const ChainTraces& chains);

// Monte Carlo standard error of the p-quantile: the indicator ESS gives an interval on
// the probability scale (normal approximation), mapped back through the pooled draws.
double quantile_mcse(const ChainTraces& chains, double p);

struct PanelCell {
    std::string country;
    int year = 0;
};

struct MonitoredTrace {
    std::string name;
    ChainTraces chains;
};

// alpha_world, beta_1..3, phi, theta, sqrt_gamma0, sigma_lambda, sigma_dhs, sigma_notdhs,
// then mmr[country,year] for every panel cell.
std::vector<MonitoredTrace> monitored_traces(const PosteriorSamples& samples, const ModelData& data,
                                             const std::vector<PanelCell>& panel);

// Every country at the given year.
std::vector<PanelCell> default_panel(const ModelData& data, int year);

struct DiagnosticRow {
    std::string parameter;
    std::optional<double> rhat;
    double ess = 0.0;
    double median = 0.0;
    double median_mcse = 0.0;
};

std::vector<DiagnosticRow> diagnose(const std::vector<MonitoredTrace>& traces);

}  // namespace bmat
