#include "bmat/arma.hpp"

#include <cmath>
#include <limits>

#include "bmat/errors.hpp"

namespace bmat {

double stationary_variance(double phi, double theta, double sigma) {
    if (!(std::fabs(phi) < 1.0)) throw InputError("AR parameter must satisfy |phi| < 1");
    return (1.0 - 2.0 * phi * theta + theta * theta) / (1.0 - phi * phi) * sigma * sigma;
}

double sigma_from_stationary(double phi, double theta, double gamma0) {
    if (!(gamma0 > 0)) throw InputError("stationary variance must be positive");
    return std::sqrt(gamma0 * (1.0 - phi * phi) / (1.0 - 2.0 * phi * theta + theta * theta));
}

ArmaScale arma_scale(double phi, double theta, double sqrt_gamma0) {
    ArmaScale s;
    s.gamma0 = sqrt_gamma0 * sqrt_gamma0;
    s.sigma2 = s.gamma0 * (1.0 - phi * phi) / (1.0 - 2.0 * phi * theta + theta * theta);
    return s;
}

double distortion_log_density(std::span<const double> distortion, std::span<const double> innovation,
                              const ArmaScale& scale) {
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    if (distortion.empty() || innovation.size() != distortion.size()) {
        throw InputError("distortion and innovation paths must have equal nonzero length");
    }
    double r = scale.sigma2 / scale.gamma0;
    double cond_var = scale.sigma2 * (1.0 - r);
    if (!(scale.gamma0 > 0) || !(cond_var > 0)) return ninf;

    double lp = normal_logpdf(distortion[0], 0.0, std::sqrt(scale.gamma0));
    lp += normal_logpdf(innovation[0], r * distortion[0], std::sqrt(cond_var));
    double sd = std::sqrt(scale.sigma2);
    double ss = 0.0;
    for (std::size_t t = 1; t < innovation.size(); ++t) ss += innovation[t] * innovation[t];
    auto n = static_cast<double>(innovation.size() - 1);
    lp += -0.5 * ss / scale.sigma2 - n * (std::log(sd) + kLogSqrt2Pi);
    return lp;
}

double distortion_log_density(std::span<const double> distortion, std::span<const double> innovation, double phi,
                              double theta, double sigma) {
    ArmaScale s{stationary_variance(phi, theta, sigma), sigma * sigma};
    return distortion_log_density(distortion, innovation, s);
}

void propagate_distortion(std::span<double> distortion, std::span<const double> innovation, double phi,
                          double theta) {
    for (std::size_t t = 1; t < distortion.size(); ++t) {
        distortion[t] = phi * distortion[t - 1] - theta * innovation[t - 1] + innovation[t];
    }
}

void innovations_from_distortion(std::span<const double> distortion, std::span<double> innovation, double phi,
                                 double theta) {
    for (std::size_t t = 1; t < distortion.size(); ++t) {
        innovation[t] = distortion[t] - phi * distortion[t - 1] + theta * innovation[t - 1];
    }
}

std::vector<double> log_multiplier_path(std::span<const double> distortion, int anchor_index) {
    const int n = static_cast<int>(distortion.size()) + 1;
    if (anchor_index < 0 || anchor_index >= n) throw InputError("anchor year outside the distortion path");
    std::vector<double> lm(static_cast<std::size_t>(n), 0.0);
    for (int j = anchor_index + 1; j < n; ++j) lm[j] = lm[j - 1] - distortion[j - 1];
    for (int j = anchor_index - 1; j >= 0; --j) lm[j] = lm[j + 1] + distortion[j];
    return lm;
}

std::vector<double> multiplier_path(std::span<const double> distortion, int anchor_index) {
    auto m = log_multiplier_path(distortion, anchor_index);
    for (auto& v : m) v = std::exp(v);
    return m;
}

std::vector<double> arr_from_multiplier(std::span<const double> multiplier) {
    std::vector<double> arr;
    for (std::size_t t = 0; t + 1 < multiplier.size(); ++t) arr.push_back(-std::log(multiplier[t + 1] / multiplier[t]));
    return arr;
}

void simulate_distortion(Rng& rng, double phi, double theta, double sigma, std::span<double> distortion,
                         std::span<double> innovation) {
    double gamma0 = stationary_variance(phi, theta, sigma);
    double r = sigma * sigma / gamma0;
    distortion[0] = std::sqrt(gamma0) * std_normal(rng);
    innovation[0] = r * distortion[0] + std::sqrt(sigma * sigma * (1.0 - r)) * std_normal(rng);
    for (std::size_t t = 1; t < innovation.size(); ++t) innovation[t] = sigma * std_normal(rng);
    propagate_distortion(distortion, innovation, phi, theta);
}

}  // namespace bmat
