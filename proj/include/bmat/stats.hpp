#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace bmat {

using Rng = std::mt19937_64;

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_logpdf(double x, double mean, double sd);
double normal_cdf(double z);
// log of (Phi(b) - Phi(a)) for standard normal bounds a < b
double log_normal_mass(double a, double b);
// log density of N(mean, sd^2) truncated to (lo, hi); -inf outside
double truncated_normal_logpdf(double x, double mean, double sd, double lo, double hi);
// Inverse-cdf draw from N(mean, sd^2) truncated to (lo, hi).
double truncated_normal_draw(Rng& rng, double mean, double sd, double lo, double hi);
double normal_quantile(double p);

double std_normal(Rng& rng);
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

// Linear interpolation between order statistics: h = (n-1)p.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

// Upper tail probability of a chi-square variate.
double chi_square_sf(double x, double dof);

double logistic(double z);
double logit(double p);

}  // namespace bmat
