#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bmat/errors.hpp"
#include "bmat/likelihood.hpp"
#include "model_fixture.hpp"

using namespace bmat;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

EstimationWindow window() { return {2000, 2010, 2003}; }

std::vector<ProcessedObservation> mixed_observations() {
    using fixture::observation;
    return {
        observation("C1", 2001, 2002, 0.004, SourceType::specialized_study, 0.1),
        observation("C1", 2004, 2007, 0.005, SourceType::misc_maternal, 0.2, Definition::maternal, true),
        observation("C2", 2002, 2003, 0.003, SourceType::vr, 0.15),
        observation("C2", 2006.5, 2008.5, 0.006, SourceType::misc_pregnancy_related, 0.25,
                    Definition::pregnancy_related, false),
        fixture::vr_random("C3", 2005, 0.0035, 0.1, 1.3, 1.8, 0.5),
    };
}

}  // namespace

TEST_CASE("expected non-AIDS deaths") {
    std::vector<CountryYearEnvelope> rows;
    for (int y = 2000; y <= 2001; ++y) {
        CountryYearEnvelope e;
        e.country = "AAA";
        e.year = y;
        e.births = 1000;
        e.deaths = 1000;
        e.gdp = y == 2000 ? 1000 : 2000;
        e.gfr = 0.1;
        e.sab = 0.5;
        e.region = "R";
        rows.push_back(e);
    }
    auto data = build_model_data({}, EnvelopeTable(rows), {2000, 2001, 2000}, {});
    ModelState s = ModelState::shaped(data);
    s.alpha_country[0] = std::log(0.01);
    s.beta = {0, 0, 0};
    CHECK(expected_nonaids_deaths(s, data, 0, 2000) == doctest::Approx(10.0).epsilon(1e-14));

    s.beta = {1, 0, 0};
    CHECK(expected_nonaids_deaths(s, data, 0, 2001) ==
          doctest::Approx(0.5 * expected_nonaids_deaths(s, data, 0, 2000)).epsilon(1e-14));

    s.beta = {0.2, 0.9, 1.5};
    double hand = std::exp(std::log(1000.0) + std::log(0.01) - 0.2 * std::log(1000.0) + 0.9 * std::log(0.1) - 1.5 * 0.5);
    CHECK(expected_nonaids_deaths(s, data, 0, 2000) == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("assembled quantities") {
    auto env = fixture::envelopes(2, 2000, 2010, 20.0);
    auto data = build_model_data({}, env, window(), {});
    auto s = fixture::reasonable_state(data);
    auto dq = assemble_mmr(s, data);
    for (std::size_t c = 0; c < 2; ++c) {
        const auto& d = dq.countries[c];
        CHECK(d.multiplier[3] == 1.0);
        for (std::size_t j = 0; j < d.mmr.size(); ++j) {
            CHECK(d.nonaids_mmr[j] == doctest::Approx(d.expected_nonaids_mmr[j] * d.multiplier[j]).epsilon(1e-13));
            CHECK(d.deaths[j] == doctest::Approx(d.nonaids_deaths[j] + data.countries[c].aids_maternal[j]).epsilon(1e-14));
            CHECK(d.mmr[j] == doctest::Approx(d.deaths[j] / data.countries[c].births[j]).epsilon(1e-14));
        }
    }
    // flat distortions and no AIDS: everything equals its expected value
    auto env0 = fixture::envelopes(2, 2000, 2010, 0.0);
    auto data0 = build_model_data({}, env0, window(), {});
    auto s0 = ModelState::shaped(data0);
    s0.alpha_country = {-4, -4};
    auto dq0 = assemble_mmr(s0, data0);
    for (std::size_t j = 0; j < 11; ++j) {
        CHECK(dq0.countries[0].nonaids_mmr[j] == dq0.countries[0].expected_nonaids_mmr[j]);
        CHECK(dq0.countries[0].mmr[j] == dq0.countries[0].nonaids_mmr[j]);
    }
}

TEST_CASE("observation log-likelihood") {
    auto env = fixture::envelopes(3, 2000, 2010, 0.0);
    auto data = build_model_data(mixed_observations(), env, window(), {});
    auto s = fixture::reasonable_state(data);
    std::vector<double> nonaids, total;

    SUBCASE("zero residual") {
        const auto& o = data.obs[0];
        country_deaths(data.countries[0], data.window, s.alpha_country[0], s.beta, s.distortion[0], nonaids, total);
        ObsTerm exact = o;
        exact.log_y = observation_moments(o, s, nonaids, total).mean;
        double sigma = std::sqrt(o.sigma2);
        CHECK(observation_loglik(exact, s, nonaids, total) ==
              doctest::Approx(-std::log(sigma * std::sqrt(2 * std::numbers::pi))).epsilon(1e-14));
    }
    SUBCASE("pregnancy-related mean uses omega") {
        const auto& o = data.obs[3];
        REQUIRE(o.definition == Definition::pregnancy_related);
        country_deaths(data.countries[1], data.window, s.alpha_country[1], s.beta, s.distortion[1], nonaids, total);
        s.omega[1] = 0.85;
        double phi = 0;
        for (std::size_t k = 0; k < o.weights.size(); ++k) phi += o.weights[k] * nonaids[o.first + k];
        double expect = std::log(phi / 0.85 / kMiscUnderreporting / o.deaths);
        CHECK(observation_moments(o, s, nonaids, total).mean == doctest::Approx(expect).epsilon(1e-14));
        // misc variance adds the non-sampling term
        CHECK(observation_variance(o, s) == doctest::Approx(0.25 * 0.25 + s.sigma_notdhs * s.sigma_notdhs));
    }
    SUBCASE("multi-year period sums yearly deaths") {
        const auto& o = data.obs[1];
        REQUIRE(o.weights.size() == 3);
        country_deaths(data.countries[0], data.window, s.alpha_country[0], s.beta, s.distortion[0], nonaids, total);
        double phi = total[4] + total[5] + total[6];
        double d = data.countries[0].deaths[4] + data.countries[0].deaths[5] + data.countries[0].deaths[6];
        CHECK(observation_moments(o, s, nonaids, total).mean ==
              doctest::Approx(std::log(phi / kMiscUnderreporting / d)).epsilon(1e-14));
        CHECK(observation_variance(o, s) == doctest::Approx(0.04 + s.sigma_dhs * s.sigma_dhs));
    }
}

TEST_CASE("normal density oracle") {
    ObsTerm o;
    o.log_y = std::log(0.02);
    o.sigma2 = 0.04;
    o.kind = ObsKind::specialized;
    o.first = 0;
    o.weights = {1.0};
    o.deaths = 1000;
    o.gamma = 1.0;
    ModelState s;
    std::vector<double> total{25.0}, nonaids{25.0};  // 25 / 1000 = 0.025
    double z = std::log(0.02 / 0.025) / 0.2;
    double hand = -0.5 * z * z - std::log(0.2) - 0.5 * std::log(2 * std::numbers::pi);
    CHECK(std::abs(observation_loglik(o, s, nonaids, total) - hand) < 1e-10);
}

TEST_CASE("omega prior integrates to one") {
    auto data = build_model_data({}, fixture::envelopes(2, 2000, 2010), window(), {});
    Posterior post(data);
    for (std::size_t c : {0u, 1u}) {
        // composite Simpson on (0,1)
        const int n = 20000;
        const double h = 1.0 / n;
        double sum = 0;
        for (int i = 0; i <= n; ++i) {
            // the truncated density is one-sided continuous at the bounds
            double x = std::clamp(i * h, 1e-15, 1.0 - 1e-15);
            double f = std::exp(post.log_prior_omega(x, c));
            sum += f * (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2));
        }
        CHECK(std::abs(sum * h / 3 - 1.0) < 1e-6);
    }
}

TEST_CASE("support violations give -inf") {
    auto data = build_model_data(mixed_observations(), fixture::envelopes(3, 2000, 2010), window(), {});
    Posterior post(data);
    auto base = fixture::reasonable_state(data);
    REQUIRE(std::isfinite(post.log_posterior(base)));
    auto check_out = [&](auto mutate) {
        auto s = base;
        mutate(s);
        CHECK(post.log_posterior(s) == kNegInf);
    };
    check_out([](ModelState& s) { s.phi = 1.2; });
    check_out([](ModelState& s) { s.theta = 0.1; });
    check_out([](ModelState& s) { s.sqrt_gamma0 = 0.03; });
    check_out([](ModelState& s) { s.sigma_lambda = 2.5; });
    check_out([](ModelState& s) { s.lambda[0] = 2.5; });
    check_out([](ModelState& s) { s.omega[0] = 1.0; });
    check_out([](ModelState& s) { s.sigma_dhs = 0.05; });
    check_out([](ModelState& s) { s.sigma_notdhs = 0.6; });
    check_out([](ModelState& s) { s.sigma_country = 6; });
    check_out([](ModelState& s) { s.sigma_region = -1; });
    check_out([](ModelState& s) {
        s.gamma[0] = 1.9;
        s.gamma_at_g[0] = 0;
    });
}

TEST_CASE("spike-and-slab prior") {
    GammaSlot degenerate{0, 2000, 1.5, 2.0, 1.0};
    CHECK(gamma_log_prior(1.5, true, degenerate) == 0.0);
    CHECK(gamma_log_prior(1.7, false, degenerate) == kNegInf);
    GammaSlot slot{0, 2000, 1.3, 1.8, 0.5};
    CHECK(gamma_log_prior(1.3, true, slot) == doctest::Approx(std::log(0.5)));
    CHECK(gamma_log_prior(1.5, false, slot) == doctest::Approx(std::log(0.5 / 0.5)));
    CHECK(gamma_log_prior(1.9, false, slot) == kNegInf);
}

TEST_CASE("maternal deaths above all deaths are rejected") {
    auto data = build_model_data(mixed_observations(), fixture::envelopes(3, 2000, 2010), window(), {});
    Posterior post(data);
    auto s = fixture::reasonable_state(data);
    const auto& cd = data.countries[0];
    // choose alpha so that deaths in the anchor year are 1.01 D
    int j = data.window.anchor_index();
    double log_rest = cd.log_nonaids_deaths[j] - s.beta[0] * cd.log_gdp[j] + s.beta[1] * cd.log_gfr[j] - s.beta[2] * cd.sab[j];
    s.alpha_country[0] = std::log(1.01 * cd.deaths[j]) - log_rest;
    CHECK(post.log_posterior(s) == kNegInf);
}

TEST_CASE("empty data leaves prior plus process") {
    auto data = build_model_data({}, fixture::envelopes(3, 2000, 2010), window(), {});
    Posterior post(data);
    auto s = fixture::reasonable_state(data);
    double expect = post.log_prior(s);
    for (std::size_t c = 0; c < 3; ++c) expect += post.process_log_density(s, c);
    CHECK(post.log_posterior(s) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("duplicate observation adds its own log-likelihood") {
    auto env = fixture::envelopes(3, 2000, 2010);
    auto obs = mixed_observations();
    auto data = build_model_data(obs, env, window(), {});
    auto s = fixture::reasonable_state(data);
    double before = Posterior(data).log_posterior(s);
    obs.push_back(obs[1]);
    auto data2 = build_model_data(obs, env, window(), {});
    std::vector<double> nonaids, total;
    country_deaths(data.countries[0], data.window, s.alpha_country[0], s.beta, s.distortion[0], nonaids, total);
    double single = observation_loglik(data.obs[1], s, nonaids, total);
    CHECK(Posterior(data2).log_posterior(s) == doctest::Approx(before + single).epsilon(1e-13));
}

TEST_CASE("log posterior ignores observation order") {
    auto env = fixture::envelopes(3, 2000, 2010);
    auto obs = mixed_observations();
    auto data = build_model_data(obs, env, window(), {});
    auto s = fixture::reasonable_state(data);
    std::reverse(obs.begin(), obs.end());
    auto data2 = build_model_data(obs, env, window(), {});
    CHECK(Posterior(data2).log_posterior(s) == doctest::Approx(Posterior(data).log_posterior(s)).epsilon(1e-13));
}

TEST_CASE("finite-difference gradient in beta_1") {
    auto env = fixture::envelopes(3, 2000, 2010, 15.0);
    auto data = build_model_data(mixed_observations(), env, window(), {});
    Posterior post(data);
    auto s = fixture::reasonable_state(data);

    // analytic: each observation contributes (log y - mean)/var * d mean / d beta_1
    double grad = -(s.beta[0] - post.prior().beta_mean) / post.prior().beta_var;
    std::vector<double> nonaids, total;
    for (std::size_t c = 0; c < data.countries.size(); ++c) {
        const auto& cd = data.countries[c];
        country_deaths(cd, data.window, s.alpha_country[c], s.beta, s.distortion[c], nonaids, total);
        for (int i : cd.obs) {
            const auto& o = data.obs[static_cast<std::size_t>(i)];
            auto m = observation_moments(o, s, nonaids, total);
            double num = 0, den = 0;
            for (std::size_t k = 0; k < o.weights.size(); ++k) {
                auto j = o.first + k;
                double dna = o.weights[k] * nonaids[j];
                num += -cd.log_gdp[j] * dna;
                den += o.weights[k] * (o.definition == Definition::maternal ? total[j] : nonaids[j]);
            }
            double dmean;
            if (o.definition == Definition::maternal) {
                dmean = num / den;
            } else {
                double omega = s.omega[c];
                dmean = (num / omega) / (den / omega + o.aids_preg);
            }
            grad += (o.log_y - m.mean) / m.var * dmean;
        }
    }
    const double h = 1e-6;
    auto sp = s, sm = s;
    sp.beta[0] += h;
    sm.beta[0] -= h;
    double fd = (post.log_posterior(sp) - post.log_posterior(sm)) / (2 * h);
    CHECK(std::abs(fd - grad) <= 1e-5 * std::abs(grad));
}

TEST_CASE("scaling births scales the MMR only") {
    auto obs = mixed_observations();
    auto env = fixture::envelopes(3, 2000, 2010, 10.0);
    std::vector<CountryYearEnvelope> rows = env.rows();
    for (auto& r : rows) r.births *= 3.0;
    auto data = build_model_data(obs, env, window(), {});
    auto data3 = build_model_data(obs, EnvelopeTable(rows), window(), {});
    auto s = fixture::reasonable_state(data);
    auto a = assemble_mmr(s, data), b = assemble_mmr(s, data3);
    for (std::size_t j = 0; j < a.countries[0].mmr.size(); ++j) {
        CHECK(b.countries[0].mmr[j] == doctest::Approx(a.countries[0].mmr[j] / 3.0).epsilon(1e-14));
        CHECK(b.countries[0].deaths[j] == a.countries[0].deaths[j]);
    }
    CHECK(Posterior(data3).data_loglik(s) == Posterior(data).data_loglik(s));
}

TEST_CASE("NaN is a hard error naming the component") {
    auto data = build_model_data(mixed_observations(), fixture::envelopes(3, 2000, 2010), window(), {});
    Posterior post(data);
    auto s = fixture::reasonable_state(data);
    s.alpha_world = std::numeric_limits<double>::quiet_NaN();
    try {
        post.log_posterior(s);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("prior") != std::string::npos);
    }
    auto t = fixture::reasonable_state(data);
    t.innovation[1][2] = std::numeric_limits<double>::quiet_NaN();
    try {
        post.log_posterior(t);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("C2") != std::string::npos);
    }
}
