#include "bmat/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>

#include "bmat/errors.hpp"
#include "bmat/vr_preprocess.hpp"

namespace bmat {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Random-walk scale tuned toward a target acceptance rate during burn-in only.
struct Adaptive {
    std::string name;
    double log_scale = 0.0;
    double target = 0.44;
    long batch_tries = 0, batch_accepts = 0, batches = 0;
    ProposalLog log;

    double scale() const { return std::exp(log_scale); }

    void record(bool accepted, bool adapting, int batch_size) {
        if (adapting) {
            ++log.burn_in_tries;
            log.burn_in_accepts += accepted;
            ++batch_tries;
            batch_accepts += accepted;
            if (batch_tries >= batch_size) {
                ++batches;
                double rate = double(batch_accepts) / double(batch_tries);
                log_scale += 2.0 * (rate - target) / std::sqrt(double(batches));
                log_scale = std::clamp(log_scale, -20.0, 5.0);
                batch_tries = batch_accepts = 0;
            }
        } else {
            ++log.tries;
            log.accepts += accepted;
        }
    }
};

bool accept(Rng& rng, double log_ratio) {
    if (std::isnan(log_ratio)) throw NumericalError("NaN acceptance ratio during sampling");
    if (log_ratio >= 0) return true;
    return std::log(uniform01(rng)) < log_ratio;
}

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

class Chain {
public:
    Chain(const SamplerConfig& cfg, const Posterior& post, Rng rng, ModelState start)
        : cfg_(cfg), post_(post), data_(post.data()), rng_(rng), s_(std::move(start)) {
        const auto nc = data_.countries.size();
        steps_ = static_cast<std::size_t>(data_.window.steps());
        ll_.resize(nc);
        proc_.resize(nc);
        for (std::size_t c = 0; c < nc; ++c) {
            ll_[c] = post_.country_loglik(s_, c);
            proc_[c] = post_.process_log_density(s_, c);
        }
        double lp = post_.log_posterior(s_);
        if (!std::isfinite(lp)) throw NumericalError("initial state has non-finite log-posterior");

        region_members_.resize(data_.regions.size());
        for (std::size_t c = 0; c < nc; ++c) {
            region_members_[static_cast<std::size_t>(data_.countries[c].region)].push_back(c);
            bool preg = false;
            for (int i : data_.countries[c].obs) {
                if (data_.obs[static_cast<std::size_t>(i)].definition == Definition::pregnancy_related) preg = true;
            }
            has_preg_.push_back(preg);
        }
        // Mean covariate term per country: z = (-log gdp, log gfr, -sab).
        covariate_mean_.assign(nc, {0.0, 0.0, 0.0});
        for (std::size_t c = 0; c < nc; ++c) {
            const auto& cd = data_.countries[c];
            auto n = static_cast<double>(cd.log_gdp.size());
            for (std::size_t j = 0; j < cd.log_gdp.size(); ++j) {
                covariate_mean_[c][0] -= cd.log_gdp[j] / n;
                covariate_mean_[c][1] += cd.log_gfr[j] / n;
                covariate_mean_[c][2] -= cd.sab[j] / n;
            }
        }
        has_dhs_ = data_.has_misc(true);
        has_notdhs_ = data_.has_misc(false);

        auto scalar = [&](const std::string& name, double log_scale) {
            Adaptive a;
            a.name = name;
            a.log.name = name;
            a.log_scale = log_scale;
            a.target = cfg_.target_scalar;
            return a;
        };
        auto block = [&](const std::string& name, double log_scale) {
            Adaptive a = scalar(name, log_scale);
            a.target = cfg_.target_block;
            return a;
        };
        for (int h = 0; h < 3; ++h) beta_.push_back(scalar("beta_" + std::to_string(h + 1), std::log(0.02)));
        sigma_country_ = scalar("sigma_country", std::log(0.3));
        sigma_country_nc_ = scalar("sigma_country_noncentered", std::log(0.1));
        sigma_region_ = scalar("sigma_region", std::log(0.5));
        sigma_region_nc_ = scalar("sigma_region_noncentered", std::log(0.1));
        phi_ = scalar("phi", std::log(0.5));
        theta_ = scalar("theta", std::log(0.5));
        phi_white_ = scalar("phi_whitened", std::log(0.3));
        phi_mixed_ = scalar("phi_mixed", std::log(0.3));
        phi_theta_ = block("phi_theta_joint", std::log(0.1));
        sqrt_gamma0_ = scalar("sqrt_gamma0", std::log(0.2));
        sqrt_gamma0_nc_ = scalar("sqrt_gamma0_noncentered", std::log(0.05));
        sqrt_gamma0_mixed_ = scalar("sqrt_gamma0_mixed", std::log(0.1));
        sigma_lambda_ = scalar("sigma_lambda", std::log(0.5));
        sigma_lambda_nc_ = scalar("sigma_lambda_noncentered", std::log(0.2));
        sigma_lambda_mixed_ = scalar("sigma_lambda_mixed", std::log(0.2));
        sigma_dhs_ = scalar("sigma_dhs", std::log(0.1));
        sigma_notdhs_ = scalar("sigma_notdhs", std::log(0.1));
        for (std::size_t c = 0; c < nc; ++c) {
            const auto& code = data_.countries[c].code;
            alpha_.push_back(scalar("alpha_country[" + code + "]", std::log(0.05)));
            lambda_.push_back(scalar("lambda[" + code + "]", std::log(0.3)));
            lambda_nc_.push_back(scalar("lambda_noncentered[" + code + "]", std::log(0.1)));
            initial_.push_back(scalar("path_initial[" + code + "]", std::log(0.5)));
            eps_.push_back(scalar("innovation[" + code + "]", std::log(0.5)));
            shift_.push_back(scalar("path_shift[" + code + "]", std::log(0.3)));
            omega_.push_back(scalar("omega[" + code + "]", std::log(0.05)));
            // Roughly one observation every other year pins the path more tightly than its prior.
            data_rich_.push_back(2 * data_.countries[c].obs.size() >= steps_);
        }
        for (std::size_t k = 0; k < data_.slots.size(); ++k) {
            const auto& slot = data_.slots[k];
            gamma_slab_.push_back(
                scalar("gamma_slab[" + data_.countries[static_cast<std::size_t>(slot.country)].code + "," +
                           std::to_string(slot.year) + "]",
                       std::log(0.2 * (slot.g_upper - slot.g) + 1e-12)));
        }
        frozen_.resize(kBlockOrder.size());
        for (std::size_t b = 0; b < kBlockOrder.size(); ++b) frozen_[b] = cfg_.is_frozen(kBlockOrder[b]);
    }

    ChainSamples run() {
        ChainSamples out;
        for (int it = 1; it <= cfg_.n_iterations; ++it) {
            adapting_ = it <= cfg_.burn_in;
            sweep();
            if (it == cfg_.burn_in) snapshot_scales();
            if (it > cfg_.burn_in && (it - cfg_.burn_in) % cfg_.thin == 0) {
                double lp = post_.log_posterior(s_);
                if (!std::isfinite(lp)) throw NumericalError("retained state has non-finite log-posterior");
                out.iterations.push_back(it);
                out.states.push_back(s_);
                out.log_posterior.push_back(lp);
            }
        }
        if (cfg_.burn_in == 0) snapshot_scales();
        for (auto* a : all_proposals()) {
            a->log.final_scale = a->scale();
            out.acceptance.push_back(a->log);
        }
        return out;
    }

private:
    const SamplerConfig& cfg_;
    const Posterior& post_;
    const ModelData& data_;
    Rng rng_;
    ModelState s_;
    std::size_t steps_ = 0;
    std::vector<double> ll_, proc_;
    std::vector<std::vector<std::size_t>> region_members_;
    std::vector<bool> has_preg_;
    std::vector<std::array<double, 3>> covariate_mean_;
    bool has_dhs_ = false, has_notdhs_ = false;
    bool adapting_ = true;
    std::vector<bool> frozen_;

    std::vector<Adaptive> beta_;
    Adaptive sigma_country_, sigma_country_nc_, sigma_region_, sigma_region_nc_;
    Adaptive phi_, theta_, phi_white_, phi_mixed_, phi_theta_;
    std::vector<bool> data_rich_;  // countries whose paths are pinned by data
    Adaptive sqrt_gamma0_, sqrt_gamma0_nc_, sqrt_gamma0_mixed_, sigma_lambda_, sigma_lambda_nc_, sigma_lambda_mixed_;
    Adaptive sigma_dhs_, sigma_notdhs_;
    std::vector<Adaptive> alpha_, lambda_, lambda_nc_, initial_, eps_, shift_, omega_, gamma_slab_;

    std::vector<Adaptive*> all_proposals() {
        std::vector<Adaptive*> v;
        for (auto& a : beta_) v.push_back(&a);
        for (auto* a : {&sigma_country_, &sigma_country_nc_, &sigma_region_, &sigma_region_nc_, &phi_, &theta_,
                        &phi_white_, &phi_mixed_, &phi_theta_, &sqrt_gamma0_, &sqrt_gamma0_nc_, &sqrt_gamma0_mixed_, &sigma_lambda_, &sigma_lambda_nc_, &sigma_lambda_mixed_, &sigma_dhs_, &sigma_notdhs_}) {
            v.push_back(a);
        }
        for (auto* group : {&alpha_, &lambda_, &lambda_nc_, &initial_, &eps_, &shift_, &omega_, &gamma_slab_}) {
            for (auto& a : *group) v.push_back(&a);
        }
        return v;
    }

    void snapshot_scales() {
        for (auto* a : all_proposals()) a->log.scale_at_burn_in_end = a->scale();
    }

    void record(Adaptive& a, bool accepted) { a.record(accepted, adapting_, cfg_.adapt_batch); }

    void sweep() {
        if (!frozen_[0]) update_beta();
        if (!frozen_[1]) update_alpha();
        if (!frozen_[2]) update_hierarchy();
        if (!frozen_[3]) update_arma();
        if (!frozen_[4]) update_scale();
        if (!frozen_[5]) update_paths();
        if (!frozen_[6]) update_omega();
        if (!frozen_[7]) update_nonsampling();
        if (!frozen_[8]) update_gamma();
    }

    // Data log-likelihood of every country, written to `out`; returns the sum.
    double all_loglik(std::vector<double>& out) const {
        out.resize(ll_.size());
        double total = 0.0;
        for (std::size_t c = 0; c < ll_.size(); ++c) {
            out[c] = post_.country_loglik(s_, c);
            total += out[c];
            if (out[c] == kNegInf) return kNegInf;
        }
        return total;
    }

    double all_process(std::vector<double>& out) const {
        out.resize(proc_.size());
        double total = 0.0;
        for (std::size_t c = 0; c < proc_.size(); ++c) {
            out[c] = post_.process_log_density(s_, c);
            total += out[c];
        }
        return total;
    }

    // ---- beta ----
    void update_beta() {
        const auto& p = post_.prior();
        const double beta_sd = std::sqrt(p.beta_var);
        for (int h = 0; h < 3; ++h) {
            auto& prop = beta_[static_cast<std::size_t>(h)];
            double delta = prop.scale() * std_normal(rng_);
            auto old_beta = s_.beta[h];
            auto old_ac = s_.alpha_country;
            auto old_ar = s_.alpha_region;
            double old_aw = s_.alpha_world;
            double old_prior = post_.log_prior_alpha(s_) + normal_logpdf(old_beta, p.beta_mean, beta_sd);

            s_.beta[h] += delta;
            std::vector<double> region_shift(s_.alpha_region.size(), 0.0);
            for (std::size_t c = 0; c < s_.alpha_country.size(); ++c) {
                double shift = -delta * covariate_mean_[c][h];
                s_.alpha_country[c] += shift;
                auto r = static_cast<std::size_t>(data_.countries[c].region);
                region_shift[r] += shift / double(region_members_[r].size());
            }
            for (std::size_t r = 0; r < region_shift.size(); ++r) s_.alpha_region[r] += region_shift[r];
            s_.alpha_world += sum(region_shift) / double(region_shift.size());

            std::vector<double> new_ll;
            double new_total = all_loglik(new_ll);
            double new_prior = post_.log_prior_alpha(s_) + normal_logpdf(s_.beta[h], p.beta_mean, beta_sd);
            bool ok = new_total != kNegInf && accept(rng_, new_prior - old_prior + new_total - sum(ll_));
            if (ok) {
                ll_ = std::move(new_ll);
            } else {
                s_.beta[h] = old_beta;
                s_.alpha_country = std::move(old_ac);
                s_.alpha_region = std::move(old_ar);
                s_.alpha_world = old_aw;
            }
            record(prop, ok);
        }
    }

    // ---- alpha ----
    void update_alpha() {
        for (std::size_t c = 0; c < s_.alpha_country.size(); ++c) {
            auto& prop = alpha_[c];
            double ar = s_.alpha_region[static_cast<std::size_t>(data_.countries[c].region)];
            double cur = s_.alpha_country[c];
            double next = cur + prop.scale() * std_normal(rng_);
            double new_ll = post_.country_loglik(s_, c, next, s_.distortion[c]);
            bool ok = false;
            if (new_ll != kNegInf) {
                double ratio = normal_logpdf(next, ar, s_.sigma_country) - normal_logpdf(cur, ar, s_.sigma_country) +
                               new_ll - ll_[c];
                ok = accept(rng_, ratio);
            }
            if (ok) {
                s_.alpha_country[c] = next;
                ll_[c] = new_ll;
            }
            record(prop, ok);
        }
        // region means, then world mean: conjugate normal updates
        const double vc = s_.sigma_country * s_.sigma_country;
        const double vr = s_.sigma_region * s_.sigma_region;
        for (std::size_t r = 0; r < s_.alpha_region.size(); ++r) {
            double prec = 1.0 / vr + double(region_members_[r].size()) / vc;
            double acc = s_.alpha_world / vr;
            for (auto c : region_members_[r]) acc += s_.alpha_country[c] / vc;
            s_.alpha_region[r] = acc / prec + std_normal(rng_) / std::sqrt(prec);
        }
        const auto& p = post_.prior();
        double prec = 1.0 / p.alpha_world_var + double(s_.alpha_region.size()) / vr;
        double acc = p.alpha_world_mean / p.alpha_world_var;
        for (double ar : s_.alpha_region) acc += ar / vr;
        s_.alpha_world = acc / prec + std_normal(rng_) / std::sqrt(prec);
    }

    // ---- hierarchy ----
    void update_hierarchy() {
        // centered: only the alpha prior changes
        for (auto [sigma, prop] : {std::pair{&s_.sigma_country, &sigma_country_}, {&s_.sigma_region, &sigma_region_}}) {
            double old = *sigma;
            double before = post_.log_prior_alpha(s_);
            double k = std::exp(prop->scale() * std_normal(rng_));
            *sigma = old * k;
            double after = post_.log_prior_alpha(s_);
            bool ok = after != kNegInf && accept(rng_, after - before + std::log(k));
            if (!ok) *sigma = old;
            record(*prop, ok);
        }
        // non-centered sigma_country: scale country deviations from their region mean
        {
            double k = std::exp(sigma_country_nc_.scale() * std_normal(rng_));
            auto old_ac = s_.alpha_country;
            double old = s_.sigma_country;
            double before = post_.log_prior_alpha(s_);
            s_.sigma_country *= k;
            for (std::size_t c = 0; c < s_.alpha_country.size(); ++c) {
                double ar = s_.alpha_region[static_cast<std::size_t>(data_.countries[c].region)];
                s_.alpha_country[c] = ar + k * (s_.alpha_country[c] - ar);
            }
            bool ok = false;
            std::vector<double> new_ll;
            double after = post_.log_prior_alpha(s_);
            if (after != kNegInf) {
                double total = all_loglik(new_ll);
                if (total != kNegInf) {
                    double jac = double(s_.alpha_country.size() + 1) * std::log(k);
                    ok = accept(rng_, after - before + total - sum(ll_) + jac);
                }
            }
            if (ok) {
                ll_ = std::move(new_ll);
            } else {
                s_.alpha_country = std::move(old_ac);
                s_.sigma_country = old;
            }
            record(sigma_country_nc_, ok);
        }
        // non-centered sigma_region: scale region deviations, carrying their countries along
        {
            double k = std::exp(sigma_region_nc_.scale() * std_normal(rng_));
            auto old_ac = s_.alpha_country;
            auto old_ar = s_.alpha_region;
            double old = s_.sigma_region;
            double before = post_.log_prior_alpha(s_);
            s_.sigma_region *= k;
            for (std::size_t r = 0; r < s_.alpha_region.size(); ++r) {
                double next = s_.alpha_world + k * (s_.alpha_region[r] - s_.alpha_world);
                for (auto c : region_members_[r]) s_.alpha_country[c] += next - s_.alpha_region[r];
                s_.alpha_region[r] = next;
            }
            bool ok = false;
            std::vector<double> new_ll;
            double after = post_.log_prior_alpha(s_);
            if (after != kNegInf) {
                double total = all_loglik(new_ll);
                if (total != kNegInf) {
                    double jac = double(s_.alpha_region.size() + 1) * std::log(k);
                    ok = accept(rng_, after - before + total - sum(ll_) + jac);
                }
            }
            if (ok) {
                ll_ = std::move(new_ll);
            } else {
                s_.alpha_country = std::move(old_ac);
                s_.alpha_region = std::move(old_ar);
                s_.sigma_region = old;
            }
            record(sigma_region_nc_, ok);
        }
    }

    // ---- arma ----
    // Whitened coordinates of a path: the initial distortion and innovations standardized by
    // their conditional prior scales, so they are iid standard normal a priori.
    void whiten(std::size_t c, std::vector<double>& u) const {
        const auto scale = s_.country_scale(c);
        const double r = scale.sigma2 / scale.gamma0;
        const auto& d = s_.distortion[c];
        const auto& e = s_.innovation[c];
        u.resize(steps_ + 1);
        u[0] = d[0] / std::sqrt(scale.gamma0);
        if (steps_ == 0) return;
        u[1] = (e[0] - r * d[0]) / std::sqrt(scale.sigma2 * (1.0 - r));
        for (std::size_t t = 1; t < steps_; ++t) u[1 + t] = e[t] / std::sqrt(scale.sigma2);
    }

    void unwhiten(std::size_t c, const std::vector<double>& u) {
        const auto scale = s_.country_scale(c);
        const double r = scale.sigma2 / scale.gamma0;
        auto& d = s_.distortion[c];
        auto& e = s_.innovation[c];
        d[0] = u[0] * std::sqrt(scale.gamma0);
        if (steps_ > 0) e[0] = r * d[0] + u[1] * std::sqrt(scale.sigma2 * (1.0 - r));
        for (std::size_t t = 1; t < steps_; ++t) e[t] = u[1 + t] * std::sqrt(scale.sigma2);
        s_.propagate(c);
    }

    // Propose phi/theta on logit scales. Countries flagged in `keep_distortion` keep their
    // distortion path (innovations re-derived; unit Jacobian, data untouched); the others
    // keep their whitened coordinates, so their process prior cancels against the
    // transformation and only their data term enters the ratio.
    bool arma_move(double dphi, double dtheta, const std::vector<bool>& keep_distortion) {
        double old_phi = s_.phi, old_theta = s_.theta;
        double zphi = logit(old_phi) + dphi;
        double ztheta = logit(-old_theta) + dtheta;
        double new_phi = logistic(zphi), new_theta = -logistic(ztheta);
        if (!(new_phi > 0 && new_phi < 1 && new_theta > -1 && new_theta < 0)) return false;
        double log_jac = std::log(new_phi * (1 - new_phi)) - std::log(old_phi * (1 - old_phi)) +
                         std::log(-new_theta * (1 + new_theta)) - std::log(-old_theta * (1 + old_theta));

        const std::size_t nc = s_.distortion.size();
        auto saved_d = s_.distortion;
        auto saved_e = s_.innovation;
        std::vector<std::vector<double>> white(nc);
        for (std::size_t c = 0; c < nc; ++c) {
            if (!keep_distortion[c]) whiten(c, white[c]);
        }
        s_.phi = new_phi;
        s_.theta = new_theta;
        auto new_proc = proc_;
        auto new_ll = ll_;
        double ratio = log_jac;
        bool ok = true;
        for (std::size_t c = 0; c < nc && ok; ++c) {
            if (keep_distortion[c]) {
                innovations_from_distortion(s_.distortion[c], s_.innovation[c], s_.phi, s_.theta);
            } else {
                unwhiten(c, white[c]);
                new_ll[c] = post_.country_loglik(s_, c);
                ratio += new_ll[c] - ll_[c];
            }
            new_proc[c] = post_.process_log_density(s_, c);
            if (keep_distortion[c]) ratio += new_proc[c] - proc_[c];
            ok = new_proc[c] != kNegInf && new_ll[c] != kNegInf;
        }
        ok = ok && accept(rng_, ratio);
        if (ok) {
            proc_ = std::move(new_proc);
            ll_ = std::move(new_ll);
        } else {
            s_.phi = old_phi;
            s_.theta = old_theta;
            s_.distortion = std::move(saved_d);
            s_.innovation = std::move(saved_e);
        }
        return ok;
    }

    void update_arma() {
        const std::vector<bool> all(s_.distortion.size(), true), none(s_.distortion.size(), false);
        record(phi_, arma_move(phi_.scale() * std_normal(rng_), 0.0, all));
        record(theta_, arma_move(0.0, theta_.scale() * std_normal(rng_), all));
        record(phi_white_, arma_move(phi_white_.scale() * std_normal(rng_), 0.0, none));
        record(phi_mixed_, arma_move(phi_mixed_.scale() * std_normal(rng_), 0.0, data_rich_));
        double step = phi_theta_.scale();
        record(phi_theta_, arma_move(step * std_normal(rng_), step * std_normal(rng_), none));
    }

    // ---- scale ----
    void scale_paths(std::size_t c, double k) {
        for (auto& v : s_.distortion[c]) v *= k;
        for (auto& v : s_.innovation[c]) v *= k;
    }

    // Log-scale move on sqrt_gamma0. Paths of countries flagged in `rescale` scale with the
    // stationary sd (data term changes, Jacobian path_dim * log k each); the rest stay put.
    bool sqrt_gamma0_move(double step, const std::vector<bool>& rescale) {
        const double old = s_.sqrt_gamma0;
        const double k = std::exp(step * std_normal(rng_));
        if (!(old * k < post_.prior().sqrt_gamma0_max)) return false;
        const double path_dim = double(steps_ + 1);
        const std::size_t nc = s_.distortion.size();
        auto saved_d = s_.distortion;
        auto saved_e = s_.innovation;
        s_.sqrt_gamma0 = old * k;
        auto new_proc = proc_;
        auto new_ll = ll_;
        double ratio = std::log(k);
        bool ok = true;
        for (std::size_t c = 0; c < nc && ok; ++c) {
            if (rescale[c]) {
                scale_paths(c, k);
                new_ll[c] = post_.country_loglik(s_, c);
                ratio += new_ll[c] - ll_[c] + path_dim * std::log(k);
            }
            new_proc[c] = post_.process_log_density(s_, c);
            ratio += new_proc[c] - proc_[c];
            ok = new_proc[c] != kNegInf && new_ll[c] != kNegInf;
        }
        ok = ok && accept(rng_, ratio);
        if (ok) {
            proc_ = std::move(new_proc);
            ll_ = std::move(new_ll);
        } else {
            s_.sqrt_gamma0 = old;
            s_.distortion = std::move(saved_d);
            s_.innovation = std::move(saved_e);
        }
        return ok;
    }

    // Log-scale move on sigma_lambda that also scales every lambda_c by k. Paths of countries
    // flagged in `rescale` follow their stationary sd.
    bool sigma_lambda_move(double step, const std::vector<bool>& rescale) {
        const double k = std::exp(step * std_normal(rng_));
        const double path_dim = double(steps_ + 1);
        const std::size_t nc = s_.distortion.size();
        const double before = post_.log_prior_lambda(s_);
        auto saved_lambda = s_.lambda;
        auto saved_d = s_.distortion;
        auto saved_e = s_.innovation;
        const double old_sigma = s_.sigma_lambda;
        s_.sigma_lambda = old_sigma * k;
        for (auto& l : s_.lambda) l *= k;
        double after = post_.log_prior_lambda(s_);
        double ratio = after - before + (double(nc) + 1.0) * std::log(k);
        bool ok = after != kNegInf;
        auto new_proc = proc_;
        auto new_ll = ll_;
        for (std::size_t c = 0; c < nc && ok; ++c) {
            if (rescale[c]) {
                double f = (1.0 + s_.lambda[c]) / (1.0 + saved_lambda[c]);
                scale_paths(c, f);
                new_ll[c] = post_.country_loglik(s_, c);
                ratio += new_ll[c] - ll_[c] + path_dim * std::log(f);
            }
            new_proc[c] = post_.process_log_density(s_, c);
            ratio += new_proc[c] - proc_[c];
            ok = new_proc[c] != kNegInf && new_ll[c] != kNegInf;
        }
        ok = ok && accept(rng_, ratio);
        if (ok) {
            proc_ = std::move(new_proc);
            ll_ = std::move(new_ll);
        } else {
            s_.sigma_lambda = old_sigma;
            s_.lambda = std::move(saved_lambda);
            s_.distortion = std::move(saved_d);
            s_.innovation = std::move(saved_e);
        }
        return ok;
    }

    void update_scale() {
        const auto& p = post_.prior();
        const double path_dim = double(steps_ + 1);
        const std::size_t nc = s_.distortion.size();
        std::vector<bool> none(nc, false), all(nc, true), sparse(nc);
        for (std::size_t c = 0; c < nc; ++c) sparse[c] = !data_rich_[c];
        record(sqrt_gamma0_, sqrt_gamma0_move(sqrt_gamma0_.scale(), none));
        record(sqrt_gamma0_nc_, sqrt_gamma0_move(sqrt_gamma0_nc_.scale(), all));
        record(sqrt_gamma0_mixed_, sqrt_gamma0_move(sqrt_gamma0_mixed_.scale(), sparse));
        record(sigma_lambda_nc_, sigma_lambda_move(sigma_lambda_nc_.scale(), all));
        record(sigma_lambda_mixed_, sigma_lambda_move(sigma_lambda_mixed_.scale(), sparse));
        // sigma_lambda
        {
            double old = s_.sigma_lambda;
            double before = post_.log_prior_lambda(s_);
            double k = std::exp(sigma_lambda_.scale() * std_normal(rng_));
            s_.sigma_lambda = old * k;
            double after = post_.log_prior_lambda(s_);
            bool ok = after != kNegInf && accept(rng_, after - before + std::log(k));
            if (!ok) s_.sigma_lambda = old;
            record(sigma_lambda_, ok);
        }
        // lambda_c, centered then non-centered
        for (std::size_t c = 0; c < s_.lambda.size(); ++c) {
            auto lambda_prior = [&](double l) {
                return truncated_normal_logpdf(l, 0.0, s_.sigma_lambda, p.lambda_lower, p.lambda_upper);
            };
            double old = s_.lambda[c];
            {
                double next = old + lambda_[c].scale() * std_normal(rng_);
                bool ok = false;
                double lp_new = lambda_prior(next);
                if (lp_new != kNegInf) {
                    s_.lambda[c] = next;
                    double proc = post_.process_log_density(s_, c);
                    ok = proc != kNegInf && accept(rng_, lp_new - lambda_prior(old) + proc - proc_[c]);
                    if (ok) proc_[c] = proc;
                    else s_.lambda[c] = old;
                }
                record(lambda_[c], ok);
            }
            old = s_.lambda[c];
            {
                double next = old + lambda_nc_[c].scale() * std_normal(rng_);
                bool ok = false;
                double lp_new = lambda_prior(next);
                if (lp_new != kNegInf) {
                    double k = (1.0 + next) / (1.0 + old);
                    auto saved_d = s_.distortion[c];
                    auto saved_e = s_.innovation[c];
                    s_.lambda[c] = next;
                    scale_paths(c, k);
                    double proc = post_.process_log_density(s_, c);
                    double ll = post_.country_loglik(s_, c);
                    if (proc != kNegInf && ll != kNegInf) {
                        ok = accept(rng_, lp_new - lambda_prior(old) + proc - proc_[c] + ll - ll_[c] +
                                              path_dim * std::log(k));
                    }
                    if (ok) {
                        proc_[c] = proc;
                        ll_[c] = ll;
                    } else {
                        s_.lambda[c] = old;
                        s_.distortion[c] = std::move(saved_d);
                        s_.innovation[c] = std::move(saved_e);
                    }
                }
                record(lambda_nc_[c], ok);
            }
        }
    }

    // ---- paths ----
    void update_paths() {
        for (std::size_t c = 0; c < s_.distortion.size(); ++c) {
            elliptical_slice(c);
            single_site(c);
            path_shift(c);
        }
    }

    // Elliptical slice sampling over (alpha_c - alpha_r, initial distortion, innovations)
    // whose conditional prior is Gaussian; the likelihood is the country's data term.
    void elliptical_slice(std::size_t c) {
        const auto scale = s_.country_scale(c);
        const double ar = s_.alpha_region[static_cast<std::size_t>(data_.countries[c].region)];
        const std::size_t n = steps_ + 2;
        std::vector<double> x(n), nu(n), prop(n);
        x[0] = s_.alpha_country[c] - ar;
        x[1] = s_.distortion[c][0];
        for (std::size_t t = 0; t < steps_; ++t) x[2 + t] = s_.innovation[c][t];

        const double r = scale.sigma2 / scale.gamma0;
        const double sd = std::sqrt(scale.sigma2);
        nu[0] = s_.sigma_country * std_normal(rng_);
        nu[1] = std::sqrt(scale.gamma0) * std_normal(rng_);
        nu[2] = r * nu[1] + std::sqrt(scale.sigma2 * (1.0 - r)) * std_normal(rng_);
        for (std::size_t t = 1; t < steps_; ++t) nu[2 + t] = sd * std_normal(rng_);

        std::vector<double> dist(steps_), innov(steps_);
        auto evaluate = [&](const std::vector<double>& v) {
            dist[0] = v[1];
            for (std::size_t t = 0; t < steps_; ++t) innov[t] = v[2 + t];
            propagate_distortion(dist, innov, s_.phi, s_.theta);
            return post_.country_loglik(s_, c, ar + v[0], dist);
        };

        const double threshold = ll_[c] + std::log(uniform01(rng_));
        double angle = uniform(rng_, 0.0, 2.0 * std::numbers::pi);
        double lo = angle - 2.0 * std::numbers::pi, hi = angle;
        for (int attempt = 0; attempt < 200; ++attempt) {
            double cs = std::cos(angle), sn = std::sin(angle);
            for (std::size_t i = 0; i < n; ++i) prop[i] = x[i] * cs + nu[i] * sn;
            double ll = evaluate(prop);
            if (ll > threshold) {
                s_.alpha_country[c] = ar + prop[0];
                s_.distortion[c] = dist;
                s_.innovation[c] = innov;
                ll_[c] = ll;
                proc_[c] = post_.process_log_density(s_, c);
                return;
            }
            if (angle < 0) lo = angle;
            else hi = angle;
            angle = uniform(rng_, lo, hi);
        }
    }

    void single_site(std::size_t c) {
        const auto scale = s_.country_scale(c);
        auto& dist = s_.distortion[c];
        auto& innov = s_.innovation[c];
        const double step0 = initial_[c].scale() * std::sqrt(scale.gamma0);
        const double step = eps_[c].scale() * std::sqrt(scale.sigma2);
        for (std::size_t k = 0; k <= steps_; ++k) {
            auto saved = dist;
            double& site = k == 0 ? dist[0] : innov[k - 1];
            double old = site;
            site += (k == 0 ? step0 : step) * std_normal(rng_);
            s_.propagate(c);
            double proc = post_.process_log_density(s_, c);
            double ll = post_.country_loglik(s_, c);
            bool ok = proc != kNegInf && ll != kNegInf && accept(rng_, proc - proc_[c] + ll - ll_[c]);
            if (ok) {
                proc_[c] = proc;
                ll_[c] = ll;
            } else {
                site = old;
                dist = std::move(saved);
            }
            record(k == 0 ? initial_[c] : eps_[c], ok);
        }
    }

    // Shift every distortion by delta; the innovations move by the constant that keeps the
    // recursion intact.
    void path_shift(std::size_t c) {
        const auto scale = s_.country_scale(c);
        double delta = shift_[c].scale() * std::sqrt(scale.gamma0) * std_normal(rng_);
        double eta = delta * (1.0 - s_.phi) / (1.0 - s_.theta);
        auto saved_d = s_.distortion[c];
        auto saved_e = s_.innovation[c];
        for (auto& v : s_.distortion[c]) v += delta;
        for (auto& v : s_.innovation[c]) v += eta;
        double proc = post_.process_log_density(s_, c);
        double ll = post_.country_loglik(s_, c);
        bool ok = proc != kNegInf && ll != kNegInf && accept(rng_, proc - proc_[c] + ll - ll_[c]);
        if (ok) {
            proc_[c] = proc;
            ll_[c] = ll;
        } else {
            s_.distortion[c] = std::move(saved_d);
            s_.innovation[c] = std::move(saved_e);
        }
        record(shift_[c], ok);
    }

    // ---- omega ----
    void update_omega() {
        const auto& p = post_.prior();
        for (std::size_t c = 0; c < s_.omega.size(); ++c) {
            if (!has_preg_[c]) {
                s_.omega[c] = truncated_normal_draw(rng_, p.omega_mean(data_.countries[c].is_ssa), p.omega_sd, 0.0, 1.0);
                continue;
            }
            double old = s_.omega[c];
            double next = old + omega_[c].scale() * std_normal(rng_);
            double lp_new = post_.log_prior_omega(next, c);
            bool ok = false;
            if (lp_new != kNegInf) {
                s_.omega[c] = next;
                double ll = post_.country_loglik(s_, c);
                ok = ll != kNegInf && accept(rng_, lp_new - post_.log_prior_omega(old, c) + ll - ll_[c]);
                if (ok) ll_[c] = ll;
                else s_.omega[c] = old;
            }
            record(omega_[c], ok);
        }
    }

    // ---- nonsampling ----
    void update_nonsampling() {
        const auto& p = post_.prior();
        for (auto [sigma, prop, present] :
             {std::tuple{&s_.sigma_dhs, &sigma_dhs_, has_dhs_}, {&s_.sigma_notdhs, &sigma_notdhs_, has_notdhs_}}) {
            if (!present) {
                *sigma = uniform(rng_, p.sigma_nonsampling_min, p.sigma_nonsampling_max);
                continue;
            }
            double old = *sigma;
            double next = old + prop->scale() * std_normal(rng_);
            bool ok = false;
            if (next > p.sigma_nonsampling_min && next < p.sigma_nonsampling_max) {
                *sigma = next;
                std::vector<double> new_ll;
                double total = all_loglik(new_ll);
                ok = total != kNegInf && accept(rng_, total - sum(ll_));
                if (ok) ll_ = std::move(new_ll);
                else *sigma = old;
            }
            record(*prop, ok);
        }
    }

    // ---- gamma ----
    void update_gamma() {
        for (std::size_t k = 0; k < data_.slots.size(); ++k) {
            const auto& slot = data_.slots[k];
            auto c = static_cast<std::size_t>(slot.country);
            auto loglik = [&](double g) {
                double old = s_.gamma[k];
                s_.gamma[k] = g;
                double ll = post_.country_loglik(s_, c);
                s_.gamma[k] = old;
                return ll;
            };
            auto next = spike_slab_update({s_.gamma[k], s_.gamma_at_g[k] != 0}, slot, loglik, rng_);
            s_.gamma[k] = next.gamma;
            s_.gamma_at_g[k] = next.at_g ? 1 : 0;
            ll_[c] = post_.country_loglik(s_, c);
            if (next.at_g) continue;
            // random walk inside the slab; the slab density is flat
            double proposal = s_.gamma[k] + gamma_slab_[k].scale() * std_normal(rng_);
            bool ok = false;
            if (proposal > slot.g && proposal < slot.g_upper) {
                double ll = loglik(proposal);
                ok = ll != kNegInf && accept(rng_, ll - ll_[c]);
                if (ok) {
                    s_.gamma[k] = proposal;
                    ll_[c] = ll;
                }
            }
            record(gamma_slab_[k], ok);
        }
    }
};

}  // namespace

void SamplerConfig::validate() const {
    if (n_chains < 1) throw InputError("sampler needs at least one chain");
    if (burn_in < 0 || burn_in >= n_iterations) throw InputError("burn_in must lie in [0, n_iterations)");
    if (thin < 1) throw InputError("thin must be at least 1");
    if (adapt_batch < 1) throw InputError("adaptation batch must be at least 1");
    if (!(target_scalar > 0 && target_scalar < 1 && target_block > 0 && target_block < 1)) {
        throw InputError("target acceptance rates must lie in (0,1)");
    }
    for (const auto& b : frozen) {
        if (std::find(kBlockOrder.begin(), kBlockOrder.end(), b) == kBlockOrder.end()) {
            throw InputError("unknown sampler block '" + b + "'");
        }
    }
}

bool SamplerConfig::is_frozen(const std::string& block) const {
    return std::find(frozen.begin(), frozen.end(), block) != frozen.end();
}

std::size_t PosteriorSamples::total() const {
    std::size_t n = 0;
    for (const auto& c : chains) n += c.states.size();
    return n;
}

std::vector<const ModelState*> PosteriorSamples::pooled() const {
    std::vector<const ModelState*> v;
    for (const auto& c : chains) {
        for (const auto& s : c.states) v.push_back(&s);
    }
    return v;
}

std::uint64_t chain_seed(std::uint64_t master, int chain) {
    return mix_seed(master, static_cast<std::uint64_t>(chain) + 1);
}

ModelState initial_state(const Posterior& post, Rng& rng, int max_attempts) {
    const auto& data = post.data();
    const auto& p = post.prior();
    const auto& w = data.window;
    const auto nc = data.countries.size();
    const auto steps = static_cast<std::size_t>(w.steps());

    auto regression = [&](std::size_t c, const std::array<double, 3>& beta, std::size_t j) {
        const auto& cd = data.countries[c];
        return -beta[0] * cd.log_gdp[j] + beta[1] * cd.log_gfr[j] - beta[2] * cd.sab[j];
    };

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        ModelState s = ModelState::shaped(data);
        for (auto& b : s.beta) b = p.beta_mean + 0.1 * std_normal(rng);
        s.phi = uniform(rng, 0.0, 1.0);
        s.theta = uniform(rng, -1.0, 0.0);
        s.sqrt_gamma0 = uniform(rng, 0.0, p.sqrt_gamma0_max);
        s.sigma_lambda = uniform(rng, 0.0, p.sigma_lambda_max);
        for (std::size_t c = 0; c < nc; ++c) {
            s.lambda[c] = truncated_normal_draw(rng, 0.0, s.sigma_lambda, p.lambda_lower, p.lambda_upper);
            s.omega[c] = truncated_normal_draw(rng, p.omega_mean(data.countries[c].is_ssa), p.omega_sd, 0.0, 1.0);
        }
        s.sigma_dhs = uniform(rng, p.sigma_nonsampling_min, p.sigma_nonsampling_max);
        s.sigma_notdhs = uniform(rng, p.sigma_nonsampling_min, p.sigma_nonsampling_max);
        for (std::size_t k = 0; k < data.slots.size(); ++k) {
            const auto& slot = data.slots[k];
            bool at_g = uniform01(rng) < slot.point_mass;
            s.gamma_at_g[k] = at_g;
            s.gamma[k] = at_g ? slot.g : uniform(rng, slot.g, slot.g_upper);
        }

        // Intercepts from the observed levels; countries without data get the average.
        std::vector<double> level(nc, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t c = 0; c < nc; ++c) {
            const auto& cd = data.countries[c];
            std::vector<double> implied;
            for (int i : cd.obs) {
                const auto& o = data.obs[static_cast<std::size_t>(i)];
                double base = 0.0;
                for (std::size_t k = 0; k < o.weights.size(); ++k) {
                    auto j = static_cast<std::size_t>(o.first) + k;
                    base += o.weights[k] * std::exp(cd.log_nonaids_deaths[j] + regression(c, s.beta, j));
                }
                double gamma = o.kind == ObsKind::vr_random ? s.gamma[static_cast<std::size_t>(o.slot)] : o.gamma;
                double target = std::exp(o.log_y) * gamma * o.deaths;
                if (o.definition == Definition::pregnancy_related) target = (target - o.aids_preg) * s.omega[c];
                if (target > 0) implied.push_back(std::log(target / base));
            }
            if (!implied.empty()) level[c] = median(implied);
        }
        std::vector<double> known;
        for (double v : level) {
            if (!std::isnan(v)) known.push_back(v);
        }
        for (std::size_t c = 0; c < nc; ++c) {
            if (!std::isnan(level[c])) continue;
            if (!known.empty()) {
                level[c] = median(known);
            } else {
                // aim at a maternal share of 1% of non-AIDS deaths
                double mean_reg = 0.0;
                for (std::size_t j = 0; j < static_cast<std::size_t>(w.years()); ++j) mean_reg += regression(c, s.beta, j);
                level[c] = std::log(0.01) - mean_reg / w.years();
            }
        }
        for (std::size_t c = 0; c < nc; ++c) s.alpha_country[c] = level[c] + 0.2 * std_normal(rng);

        std::vector<double> region_sum(data.regions.size(), 0.0), region_n(data.regions.size(), 0.0);
        for (std::size_t c = 0; c < nc; ++c) {
            auto r = static_cast<std::size_t>(data.countries[c].region);
            region_sum[r] += s.alpha_country[c];
            region_n[r] += 1.0;
        }
        double world = 0.0, dev_c = 0.0, dev_r = 0.0;
        for (std::size_t r = 0; r < region_sum.size(); ++r) {
            s.alpha_region[r] = region_sum[r] / region_n[r] + 0.1 * std_normal(rng);
            world += s.alpha_region[r] / double(region_sum.size());
        }
        s.alpha_world = world + 0.1 * std_normal(rng);
        for (std::size_t c = 0; c < nc; ++c) {
            double d = s.alpha_country[c] - s.alpha_region[static_cast<std::size_t>(data.countries[c].region)];
            dev_c += d * d / double(nc);
        }
        for (double ar : s.alpha_region) dev_r += (ar - s.alpha_world) * (ar - s.alpha_world) / double(region_sum.size());
        s.sigma_country = std::clamp(std::sqrt(dev_c), 0.1, 0.5 * p.sigma_country_max);
        s.sigma_region = std::clamp(std::sqrt(dev_r), 0.1, 0.5 * p.sigma_region_max);

        // Later attempts shrink the paths toward zero.
        double shrink = std::pow(0.5, attempt / 10);
        for (std::size_t c = 0; c < nc; ++c) {
            double sigma = std::sqrt(s.country_scale(c).sigma2);
            simulate_distortion(rng, s.phi, s.theta, sigma, s.distortion[c], s.innovation[c]);
            for (std::size_t t = 0; t < steps; ++t) {
                s.distortion[c][t] *= shrink;
                s.innovation[c][t] *= shrink;
            }
        }
        double lp = post.log_posterior(s);
        if (std::isfinite(lp)) return s;
    }
    throw NumericalError("no initial state satisfies the model constraints after " + std::to_string(max_attempts) +
                         " attempts");
}

ChainSamples run_chain(const SamplerConfig& cfg, const Posterior& post, int chain) {
    auto seed = chain_seed(cfg.seed, chain);
    Rng rng(seed);
    ModelState start = cfg.initial ? *cfg.initial : initial_state(post, rng, cfg.max_init_attempts);
    if (cfg.initial) start.propagate_all();
    Chain runner(cfg, post, rng, std::move(start));
    auto out = runner.run();
    out.seed = seed;
    return out;
}

PosteriorSamples run_chains(const SamplerConfig& cfg, const Posterior& post) {
    cfg.validate();
    PosteriorSamples out;
    out.config = cfg;
    out.chains.resize(static_cast<std::size_t>(cfg.n_chains));
    if (cfg.parallel && cfg.n_chains > 1) {
        std::vector<std::future<ChainSamples>> jobs;
        for (int k = 0; k < cfg.n_chains; ++k) {
            jobs.push_back(std::async(std::launch::async, [&cfg, &post, k] { return run_chain(cfg, post, k); }));
        }
        for (int k = 0; k < cfg.n_chains; ++k) out.chains[static_cast<std::size_t>(k)] = jobs[k].get();
    } else {
        for (int k = 0; k < cfg.n_chains; ++k) out.chains[static_cast<std::size_t>(k)] = run_chain(cfg, post, k);
    }
    return out;
}

SpikeSlab spike_slab_update(SpikeSlab current, const GammaSlot& slot, const std::function<double(double)>& loglik,
                            Rng& rng) {
    if (!(slot.point_mass < 1.0) || !(slot.g_upper > slot.g)) return {slot.g, true};
    SpikeSlab proposal;
    proposal.at_g = uniform01(rng) < slot.point_mass;
    proposal.gamma = proposal.at_g ? slot.g : uniform(rng, slot.g, slot.g_upper);
    double next = loglik(proposal.gamma);
    if (next == kNegInf) return current;
    double ratio = next - loglik(current.gamma);
    return accept(rng, ratio) ? proposal : current;
}

}  // namespace bmat
