#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bmat/likelihood.hpp"
#include "bmat/stats.hpp"

namespace bmat {

// Update blocks, in the order they run within one iteration:
//   beta        regression coefficients, each with a compensating shift of the intercepts
//   alpha       country intercepts (random walk), region and world means (exact Gibbs)
//   hierarchy   sigma_country, sigma_region (centered and non-centered scale moves)
//   arma        phi, theta: centered, whitened, and mixed (whitened only for
//               data-poor countries), then a joint whitened move
//   scale       sqrt_gamma0, sigma_lambda, lambda_c (centered, non-centered, mixed)
//   paths       per country: elliptical slice over (alpha_c, path), single-site
//               innovation updates, whole-path shift
//   omega       omega_c
//   nonsampling sigma_dhs, sigma_notdhs
//   gamma       spike-and-slab VR adjustments
inline const std::vector<std::string> kBlockOrder = {"beta",  "alpha", "hierarchy",   "arma", "scale",
                                                     "paths", "omega", "nonsampling", "gamma"};

struct SamplerConfig {
    int n_chains = 6;
    int n_iterations = 65000;
    int burn_in = 5000;
    int thin = 120;
    std::uint64_t seed = 1;
    int adapt_batch = 50;  // proposals per Robbins-Monro step
    double target_scalar = 0.44;
    double target_block = 0.23;
    int max_init_attempts = 500;
    bool parallel = true;
    std::vector<std::string> frozen;  // blocks held at their initial values
    std::optional<ModelState> initial;  // start every chain here instead of drawing

    void validate() const;
    int retained_per_chain() const { return (n_iterations - burn_in) / thin; }
    bool is_frozen(const std::string& block) const;
};

struct ProposalLog {
    std::string name;
    long burn_in_tries = 0;
    long burn_in_accepts = 0;
    long tries = 0;  // after burn-in
    long accepts = 0;
    double scale_at_burn_in_end = 0.0;
    double final_scale = 0.0;
};

struct ChainSamples {
    std::uint64_t seed = 0;
    std::vector<int> iterations;
    std::vector<ModelState> states;
    std::vector<double> log_posterior;
    std::vector<ProposalLog> acceptance;
};

struct PosteriorSamples {
    SamplerConfig config;
    std::vector<ChainSamples> chains;

    std::size_t total() const;
    // Retained states of all chains, chain by chain.
    std::vector<const ModelState*> pooled() const;
};

std::uint64_t chain_seed(std::uint64_t master, int chain);

// Dispersed starting point: hyperparameters from their priors, intercepts from the data
// levels, constraints enforced by retrying.
ModelState initial_state(const Posterior& post, Rng& rng, int max_attempts);

ChainSamples run_chain(const SamplerConfig& cfg, const Posterior& post, int chain);
PosteriorSamples run_chains(const SamplerConfig& cfg, const Posterior& post);

struct SpikeSlab {
    double gamma = 1.0;
    bool at_g = true;
};

// Independence Metropolis-Hastings move with the spike-and-slab prior as proposal.
SpikeSlab spike_slab_update(SpikeSlab current, const GammaSlot& slot, const std::function<double(double)>& loglik,
                            Rng& rng);

}  // namespace bmat
