#include "bmat/likelihood.hpp"

#include <limits>

#include "bmat/errors.hpp"
#include "bmat/stats.hpp"

namespace bmat {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double uniform_logpdf(double x, double lo, double hi) {
    return (x > lo && x < hi) ? -std::log(hi - lo) : kNegInf;
}

void check_finite(double v, const std::string& what) {
    if (std::isnan(v)) throw NumericalError("log-posterior component is NaN: " + what);
}

}  // namespace

void PriorConfig::validate() const {
    if (!(alpha_world_var > 0 && beta_var > 0 && sigma_country_max > 0 && sigma_region_max > 0 &&
          sqrt_gamma0_max > 0 && sigma_lambda_max > 0 && omega_sd > 0)) {
        throw InputError("prior scales must be positive");
    }
    if (!(lambda_lower < 0 && lambda_upper > 0 && lambda_lower >= -1.0)) {
        throw InputError("lambda prior bounds must bracket 0 and stay above -1");
    }
    if (!(sigma_nonsampling_min >= 0 && sigma_nonsampling_max > sigma_nonsampling_min)) {
        throw InputError("non-sampling error prior bounds are invalid");
    }
}

ModelState ModelState::shaped(const ModelData& data) {
    ModelState s;
    const auto nc = data.countries.size();
    const auto steps = static_cast<std::size_t>(data.window.steps());
    s.alpha_region.assign(data.regions.size(), 0.0);
    s.alpha_country.assign(nc, 0.0);
    s.lambda.assign(nc, 0.0);
    s.distortion.assign(nc, std::vector<double>(steps, 0.0));
    s.innovation.assign(nc, std::vector<double>(steps, 0.0));
    s.omega.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) s.omega[c] = data.countries[c].is_ssa ? 0.9 : 0.85;
    for (const auto& slot : data.slots) {
        s.gamma.push_back(slot.g);
        s.gamma_at_g.push_back(1);
    }
    return s;
}

void ModelState::propagate(std::size_t c) { propagate_distortion(distortion[c], innovation[c], phi, theta); }

void ModelState::propagate_all() {
    for (std::size_t c = 0; c < distortion.size(); ++c) propagate(c);
}

double expected_nonaids_deaths(const ModelState& s, const ModelData& data, std::size_t c, int year) {
    const auto& cd = data.countries.at(c);
    auto j = static_cast<std::size_t>(year - data.window.first_year);
    if (j >= cd.deaths.size()) throw InputError("year outside the estimation window");
    if (!(cd.nonaids_deaths[j] > 0)) throw InputError("non-AIDS deaths not positive");
    return std::exp(cd.log_nonaids_deaths[j] + s.alpha_country[c] - s.beta[0] * cd.log_gdp[j] +
                    s.beta[1] * cd.log_gfr[j] - s.beta[2] * cd.sab[j]);
}

bool country_deaths(const CountryData& cd, const EstimationWindow& w, double alpha, const std::array<double, 3>& beta,
                    std::span<const double> distortion, std::vector<double>& nonaids, std::vector<double>& total) {
    const int n = w.years();
    const int a = w.anchor_index();
    nonaids.resize(static_cast<std::size_t>(n));
    total.resize(static_cast<std::size_t>(n));
    // log multiplier first, then deaths
    nonaids[a] = 0.0;
    for (int j = a + 1; j < n; ++j) nonaids[j] = nonaids[j - 1] - distortion[j - 1];
    for (int j = a - 1; j >= 0; --j) nonaids[j] = nonaids[j + 1] + distortion[j];
    bool ok = true;
    for (int j = 0; j < n; ++j) {
        double log_expected =
            cd.log_nonaids_deaths[j] + alpha - beta[0] * cd.log_gdp[j] + beta[1] * cd.log_gfr[j] - beta[2] * cd.sab[j];
        if (!(log_expected < cd.log_nonaids_deaths[j])) ok = false;
        nonaids[j] = std::exp(log_expected + nonaids[j]);
        total[j] = nonaids[j] + cd.aids_maternal[j];
        if (!(total[j] < cd.deaths[j])) ok = false;
    }
    return ok;
}

DerivedQuantities assemble_mmr(const ModelState& s, const ModelData& data) {
    DerivedQuantities dq;
    const auto& w = data.window;
    for (std::size_t c = 0; c < data.countries.size(); ++c) {
        const auto& cd = data.countries[c];
        CountryDerived d;
        d.violation = !country_deaths(cd, w, s.alpha_country[c], s.beta, s.distortion[c], d.nonaids_deaths, d.deaths);
        d.multiplier = multiplier_path(s.distortion[c], w.anchor_index());
        auto n = d.deaths.size();
        d.expected_nonaids_mmr.resize(n);
        d.nonaids_mmr.resize(n);
        d.mmr.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            d.nonaids_mmr[j] = d.nonaids_deaths[j] / cd.births[j];
            d.expected_nonaids_mmr[j] = d.nonaids_mmr[j] / d.multiplier[j];
            d.mmr[j] = d.deaths[j] / cd.births[j];
        }
        d.sigma = std::sqrt(s.country_scale(c).sigma2);
        dq.violation = dq.violation || d.violation;
        dq.countries.push_back(std::move(d));
    }
    return dq;
}

double observation_gamma(const ObsTerm& o, const ModelState& s) {
    return o.kind == ObsKind::vr_random ? s.gamma[static_cast<std::size_t>(o.slot)] : o.gamma;
}

double observation_variance(const ObsTerm& o, const ModelState& s) {
    if (o.kind != ObsKind::misc) return o.sigma2;
    double ns = o.is_dhs ? s.sigma_dhs : s.sigma_notdhs;
    return o.sigma2 + ns * ns;
}

ObsMoments observation_moments(const ObsTerm& o, const ModelState& s, std::span<const double> nonaids,
                               std::span<const double> total) {
    double phi_i = 0.0;
    const auto first = static_cast<std::size_t>(o.first);
    if (o.definition == Definition::maternal) {
        for (std::size_t k = 0; k < o.weights.size(); ++k) phi_i += o.weights[k] * total[first + k];
    } else {
        for (std::size_t k = 0; k < o.weights.size(); ++k) phi_i += o.weights[k] * nonaids[first + k];
        phi_i = phi_i / s.omega[static_cast<std::size_t>(o.country)] + o.aids_preg;
    }
    return {std::log(phi_i / observation_gamma(o, s) / o.deaths), observation_variance(o, s)};
}

double observation_loglik(const ObsTerm& o, const ModelState& s, std::span<const double> nonaids,
                          std::span<const double> total) {
    auto m = observation_moments(o, s, nonaids, total);
    double r = o.log_y - m.mean;
    return -0.5 * r * r / m.var - 0.5 * std::log(m.var) - kLogSqrt2Pi;
}

double gamma_log_prior(double gamma, bool at_g, const GammaSlot& slot) {
    if (at_g) return (gamma == slot.g && slot.point_mass > 0) ? std::log(slot.point_mass) : kNegInf;
    if (!(slot.point_mass < 1.0) || !(gamma > slot.g && gamma < slot.g_upper)) return kNegInf;
    return std::log((1.0 - slot.point_mass) / (slot.g_upper - slot.g));
}

Posterior::Posterior(const ModelData& data, PriorConfig prior) : data_(&data), prior_(prior) { prior_.validate(); }

double Posterior::log_prior_alpha(const ModelState& s) const {
    const auto& p = prior_;
    double lp = normal_logpdf(s.alpha_world, p.alpha_world_mean, std::sqrt(p.alpha_world_var));
    lp += uniform_logpdf(s.sigma_region, 0.0, p.sigma_region_max);
    lp += uniform_logpdf(s.sigma_country, 0.0, p.sigma_country_max);
    if (lp == kNegInf) return lp;
    for (double ar : s.alpha_region) lp += normal_logpdf(ar, s.alpha_world, s.sigma_region);
    for (std::size_t c = 0; c < s.alpha_country.size(); ++c) {
        double ar = s.alpha_region[static_cast<std::size_t>(data_->countries[c].region)];
        lp += normal_logpdf(s.alpha_country[c], ar, s.sigma_country);
    }
    return lp;
}

double Posterior::log_prior_lambda(const ModelState& s) const {
    double lp = uniform_logpdf(s.sigma_lambda, 0.0, prior_.sigma_lambda_max);
    if (lp == kNegInf) return lp;
    for (double l : s.lambda) {
        lp += truncated_normal_logpdf(l, 0.0, s.sigma_lambda, prior_.lambda_lower, prior_.lambda_upper);
    }
    return lp;
}

double Posterior::log_prior_omega(double omega, std::size_t c) const {
    return truncated_normal_logpdf(omega, prior_.omega_mean(data_->countries[c].is_ssa), prior_.omega_sd, 0.0, 1.0);
}

double Posterior::log_prior(const ModelState& s) const {
    const auto& p = prior_;
    double lp = log_prior_alpha(s);
    for (double b : s.beta) lp += normal_logpdf(b, p.beta_mean, std::sqrt(p.beta_var));
    lp += uniform_logpdf(s.phi, 0.0, 1.0);
    lp += uniform_logpdf(s.theta, -1.0, 0.0);
    lp += uniform_logpdf(s.sqrt_gamma0, 0.0, p.sqrt_gamma0_max);
    if (lp == kNegInf) return lp;
    lp += log_prior_lambda(s);
    for (std::size_t c = 0; c < s.omega.size(); ++c) lp += log_prior_omega(s.omega[c], c);
    lp += uniform_logpdf(s.sigma_dhs, p.sigma_nonsampling_min, p.sigma_nonsampling_max);
    lp += uniform_logpdf(s.sigma_notdhs, p.sigma_nonsampling_min, p.sigma_nonsampling_max);
    for (std::size_t k = 0; k < data_->slots.size(); ++k) {
        lp += gamma_log_prior(s.gamma[k], s.gamma_at_g[k] != 0, data_->slots[k]);
    }
    return lp;
}

double Posterior::process_log_density(const ModelState& s, std::size_t c) const {
    if (!(s.phi > 0 && s.phi < 1 && s.theta > -1 && s.theta < 0 && s.country_sqrt_gamma0(c) > 0)) return kNegInf;
    return distortion_log_density(s.distortion[c], s.innovation[c], s.country_scale(c));
}

double Posterior::country_loglik(const ModelState& s, std::size_t c, double alpha,
                                 std::span<const double> distortion) const {
    thread_local std::vector<double> nonaids, total;
    const auto& cd = data_->countries[c];
    if (!country_deaths(cd, data_->window, alpha, s.beta, distortion, nonaids, total)) return kNegInf;
    double ll = 0.0;
    for (int i : cd.obs) ll += observation_loglik(data_->obs[static_cast<std::size_t>(i)], s, nonaids, total);
    return ll;
}

double Posterior::country_loglik(const ModelState& s, std::size_t c) const {
    return country_loglik(s, c, s.alpha_country[c], s.distortion[c]);
}

double Posterior::data_loglik(const ModelState& s) const {
    double ll = 0.0;
    for (std::size_t c = 0; c < data_->countries.size(); ++c) ll += country_loglik(s, c);
    return ll;
}

double Posterior::log_posterior(const ModelState& s) const {
    double lp = log_prior(s);
    check_finite(lp, "prior");
    double total = lp;
    for (std::size_t c = 0; c < data_->countries.size(); ++c) {
        double proc = process_log_density(s, c);
        check_finite(proc, "distortion process of " + data_->countries[c].code);
        double ll = country_loglik(s, c);
        check_finite(ll, "observations of " + data_->countries[c].code);
        total += proc + ll;
    }
    return total;
}

}  // namespace bmat
