#pragma once

#include <span>
#include <vector>

#include "bmat/stats.hpp"

namespace bmat {

// gamma0 = (1 - 2 phi theta + theta^2) / (1 - phi^2) * sigma^2
double stationary_variance(double phi, double theta, double sigma);

// Inverse of stationary_variance in sigma.
double sigma_from_stationary(double phi, double theta, double gamma0);

// Stationary and innovation variances of one country's distortion process.
struct ArmaScale {
    double gamma0 = 0.0;
    double sigma2 = 0.0;
};

ArmaScale arma_scale(double phi, double theta, double sqrt_gamma0);

// Log density of a distortion path under the stationary ARMA(1,1) process. Only the
// initial distortion and the innovations enter; later distortions are taken to follow
// the recursion. Returns -inf when the initial innovation variance is not positive.
double distortion_log_density(std::span<const double> distortion, std::span<const double> innovation, double phi,
                              double theta, double sigma);
double distortion_log_density(std::span<const double> distortion, std::span<const double> innovation,
                              const ArmaScale& scale);

// distortion[t] = phi distortion[t-1] - theta innovation[t-1] + innovation[t], t >= 1.
void propagate_distortion(std::span<double> distortion, std::span<const double> innovation, double phi,
                          double theta);
// Inverse: innovations implied by a distortion path and the initial innovation.
void innovations_from_distortion(std::span<const double> distortion, std::span<double> innovation, double phi,
                                 double theta);

// log multiplier for each of distortion.size()+1 years, zero at anchor_index.
std::vector<double> log_multiplier_path(std::span<const double> distortion, int anchor_index);
std::vector<double> multiplier_path(std::span<const double> distortion, int anchor_index);
// Annualized rates of reduction -log(m[t+1]/m[t]).
std::vector<double> arr_from_multiplier(std::span<const double> multiplier);

// Stationary draw of a path with `steps` distortions and innovations.
void simulate_distortion(Rng& rng, double phi, double theta, double sigma, std::span<double> distortion,
                         std::span<double> innovation);

}  // namespace bmat
