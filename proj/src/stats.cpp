#include "bmat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace bmat {

double normal_logpdf(double x, double mean, double sd) {
    double z = (x - mean) / sd;
    return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double log_normal_mass(double a, double b) {
    // Work in the tail with the smaller mass to keep precision.
    if (a > 0) return std::log(normal_cdf(-a) - normal_cdf(-b));
    return std::log(normal_cdf(b) - normal_cdf(a));
}

double truncated_normal_logpdf(double x, double mean, double sd, double lo, double hi) {
    if (!(x > lo && x < hi)) return -std::numeric_limits<double>::infinity();
    return normal_logpdf(x, mean, sd) - log_normal_mass((lo - mean) / sd, (hi - mean) / sd);
}

double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> n01;
    return boost::math::quantile(n01, p);
}

double truncated_normal_draw(Rng& rng, double mean, double sd, double lo, double hi) {
    double a = normal_cdf((lo - mean) / sd);
    double b = normal_cdf((hi - mean) / sd);
    for (int i = 0; i < 100; ++i) {
        double u = a + (b - a) * uniform01(rng);
        if (u <= 0.0 || u >= 1.0) continue;
        double x = mean + sd * normal_quantile(u);
        if (x > lo && x < hi) return x;
    }
    return 0.5 * (lo + hi);
}

double std_normal(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, p);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double chi_square_sf(double x, double dof) {
    if (x <= 0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace bmat
