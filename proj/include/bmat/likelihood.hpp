#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bmat/arma.hpp"
#include "bmat/model_data.hpp"

namespace bmat {

struct PriorConfig {
    double alpha_world_mean = std::log(0.001);
    double alpha_world_var = 100.0;
    double sigma_country_max = 5.0;
    double sigma_region_max = 5.0;
    double beta_mean = 0.5;
    double beta_var = 1000.0;
    double sqrt_gamma0_max = 0.025;
    double sigma_lambda_max = 2.0;
    double lambda_lower = -1.0;
    double lambda_upper = 2.0;
    double omega_mean_ssa = 0.9;
    double omega_mean_other = 0.85;
    double omega_sd = 0.05;
    double sigma_nonsampling_min = 0.1;
    double sigma_nonsampling_max = 0.5;

    double omega_mean(bool is_ssa) const { return is_ssa ? omega_mean_ssa : omega_mean_other; }
    void validate() const;
};

// One point of the parameter space. Distortions are stored alongside the innovations
// that generate them; after any change to innovations, phi or theta the distortion path
// must be re-propagated.
struct ModelState {
    double alpha_world = 0.0;
    std::vector<double> alpha_region;
    std::vector<double> alpha_country;
    std::array<double, 3> beta{0.5, 0.5, 0.5};
    double sigma_country = 1.0;
    double sigma_region = 1.0;
    double phi = 0.5;
    double theta = -0.5;
    double sqrt_gamma0 = 0.01;
    double sigma_lambda = 0.5;
    std::vector<double> lambda;
    std::vector<std::vector<double>> distortion;  // per country, one value per step
    std::vector<std::vector<double>> innovation;
    std::vector<double> omega;
    std::vector<double> gamma;  // per GammaSlot
    std::vector<std::uint8_t> gamma_at_g;
    double sigma_dhs = 0.2;
    double sigma_notdhs = 0.2;

    // Zero paths, unit multipliers and slot gammas at g, sized for `data`.
    static ModelState shaped(const ModelData& data);

    double country_sqrt_gamma0(std::size_t c) const { return sqrt_gamma0 * (1.0 + lambda[c]); }
    ArmaScale country_scale(std::size_t c) const { return arma_scale(phi, theta, country_sqrt_gamma0(c)); }
    void propagate(std::size_t c);
    void propagate_all();
};

// Country-year quantities implied by a state (index = year - first_year).
struct CountryDerived {
    std::vector<double> expected_nonaids_mmr;
    std::vector<double> nonaids_mmr;
    std::vector<double> nonaids_deaths;
    std::vector<double> deaths;
    std::vector<double> mmr;
    std::vector<double> multiplier;
    double sigma = 0.0;
    bool violation = false;
};

struct DerivedQuantities {
    std::vector<CountryDerived> countries;
    bool violation = false;
};

double expected_nonaids_deaths(const ModelState& s, const ModelData& data, std::size_t c, int year);

DerivedQuantities assemble_mmr(const ModelState& s, const ModelData& data);

// Yearly non-AIDS and total maternal deaths of one country; false when a hard constraint
// fails (expected non-AIDS deaths >= non-AIDS deaths, or maternal deaths >= all deaths).
bool country_deaths(const CountryData& cd, const EstimationWindow& w, double alpha, const std::array<double, 3>& beta,
                    std::span<const double> distortion, std::vector<double>& nonaids, std::vector<double>& total);

// Mean and variance of log y for one observation given yearly deaths.
struct ObsMoments {
    double mean = 0.0;
    double var = 0.0;
};
double observation_gamma(const ObsTerm& o, const ModelState& s);
double observation_variance(const ObsTerm& o, const ModelState& s);
ObsMoments observation_moments(const ObsTerm& o, const ModelState& s, std::span<const double> nonaids,
                               std::span<const double> total);
double observation_loglik(const ObsTerm& o, const ModelState& s, std::span<const double> nonaids,
                          std::span<const double> total);

// log prior of a spike-and-slab adjustment; point mass at g, uniform slab on (g, g_upper).
double gamma_log_prior(double gamma, bool at_g, const GammaSlot& slot);

class Posterior {
public:
    explicit Posterior(const ModelData& data, PriorConfig prior = {});

    const ModelData& data() const { return *data_; }
    const PriorConfig& prior() const { return prior_; }

    double log_prior(const ModelState& s) const;
    // Prior pieces, for conditional updates.
    double log_prior_alpha(const ModelState& s) const;
    double log_prior_lambda(const ModelState& s) const;
    double log_prior_omega(double omega, std::size_t c) const;

    double process_log_density(const ModelState& s, std::size_t c) const;
    double country_loglik(const ModelState& s, std::size_t c) const;
    // Data log-likelihood of country c with its level and distortions replaced.
    double country_loglik(const ModelState& s, std::size_t c, double alpha, std::span<const double> distortion) const;
    double data_loglik(const ModelState& s) const;

    // Throws NumericalError naming the component that produced NaN.
    double log_posterior(const ModelState& s) const;

private:
    const ModelData* data_;
    PriorConfig prior_;
};

}  // namespace bmat
