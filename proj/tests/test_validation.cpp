#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bmat/validation.hpp"
#include "model_fixture.hpp"

using namespace bmat;

namespace {

std::vector<ProcessedObservation> numbered(int n) {
    std::vector<ProcessedObservation> v;
    for (int i = 0; i < n; ++i) {
        auto p = fixture::observation("C1", 1990 + i % 25, 1991 + i % 25, 0.01, SourceType::misc_maternal, 0.2);
        p.obs.row = static_cast<std::size_t>(i + 1);
        v.push_back(p);
    }
    return v;
}

std::set<std::size_t> rows(const std::vector<ProcessedObservation>& v) {
    std::set<std::size_t> s;
    for (const auto& p : v) s.insert(p.obs.row);
    return s;
}

ObservationOutcome outcome(std::string country, MdgGroup g, double ref, double y, double pred, double lo, double hi,
                           double d, double b) {
    ObservationOutcome o;
    o.country = std::move(country);
    o.group = g;
    o.ref_year = ref;
    o.y = y;
    o.predicted = pred;
    o.lower = lo;
    o.upper = hi;
    o.deaths = d;
    o.births = b;
    return o;
}

}  // namespace

TEST_CASE("random split") {
    auto obs = numbered(100);
    auto a = split_random(obs, 0.2, 42);
    CHECK(a.test.size() == 20);
    CHECK(a.training.size() == 80);
    auto b = split_random(obs, 0.2, 42);
    CHECK(rows(a.test) == rows(b.test));
    auto tr = rows(a.training), te = rows(a.test);
    std::set<std::size_t> both;
    both.insert(tr.begin(), tr.end());
    both.insert(te.begin(), te.end());
    CHECK(both.size() == 100);
    for (auto r : te) CHECK(tr.count(r) == 0);
    CHECK(rows(split_random(obs, 0.2, 43).test) != te);
    CHECK_THROWS(split_random(numbered(1), 0.2, 1));
    CHECK_THROWS(split_random(obs, 1.0, 1));
}

TEST_CASE("each observation is left out about a fifth of the time") {
    auto obs = numbered(50);
    std::vector<int> hits(51, 0);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        for (const auto& p : split_random(obs, 0.2, seed).test) ++hits[p.obs.row];
    }
    for (std::size_t r = 1; r <= 50; ++r) {
        CAPTURE(r);
        CHECK(std::abs(hits[r] / 1000.0 - 0.2) <= 0.04);
    }
}

TEST_CASE("recent split uses a closed cutoff") {
    auto a = fixture::observation("C1", 2006.4, 2007.4, 0.01, SourceType::misc_maternal, 0.2);
    auto b = fixture::observation("C1", 2006.5, 2007.5, 0.01, SourceType::misc_maternal, 0.2);
    a.obs.ref_year = 2006.9;
    b.obs.ref_year = 2007.0;
    auto s = split_recent({a, b}, 2007.0);
    REQUIRE(s.training.size() == 1);
    REQUIRE(s.test.size() == 1);
    CHECK(s.training[0].obs.ref_year == 2006.9);
    CHECK(s.test[0].obs.ref_year == 2007.0);
    CHECK(split_recent({a}, 2007.0).test.empty());
}

TEST_CASE("predictive quantiles for one state match the log-normal") {
    auto train = fixture::observation("C1", 2001, 2002, 0.004, SourceType::specialized_study, 0.1);
    auto test = fixture::observation("C1", 2004, 2005, 0.005, SourceType::specialized_study, 0.2);
    auto data = build_model_data({train}, fixture::envelopes(1, 2000, 2006), {2000, 2006, 2002}, {});
    auto s = fixture::reasonable_state(data);

    auto full = build_model_data({train, test}, fixture::envelopes(1, 2000, 2006), {2000, 2006, 2002}, {});
    std::vector<double> nonaids, total;
    country_deaths(full.countries[0], full.window, s.alpha_country[0], s.beta, s.distortion[0], nonaids, total);
    double mu = observation_moments(full.obs[1], s, nonaids, total).mean;

    auto pred = predictive_draws({&s}, data, {test}, 3, 100000);
    REQUIRE(pred.size() == 1);
    // relative tolerance about four Monte Carlo sd of the 10% quantile
    CHECK(pred[0].median == doctest::Approx(std::exp(mu)).epsilon(5e-3));
    CHECK(pred[0].lower == doctest::Approx(std::exp(mu - kZ90 * 0.2)).epsilon(5e-3));
    CHECK(pred[0].upper == doctest::Approx(std::exp(mu + kZ90 * 0.2)).epsilon(5e-3));
    CHECK(std::abs(pred[0].median - std::exp(mu)) < 1e-3);

    auto again = predictive_draws({&s}, data, {test}, 3, 100000);
    CHECK(again[0].median == pred[0].median);

    // the model rejects zero variance, so a negligible one stands in for the degenerate case
    auto exact = test;
    exact.sigma = 1e-12;
    auto z = predictive_draws({&s}, data, {exact}, 3, 10);
    CHECK(z[0].median == doctest::Approx(std::exp(mu)).epsilon(1e-10));
}

TEST_CASE("hand-computed metrics on four observations") {
    // D/B = 0.05 for all, so errors per 100,000 are (y - pred) * 5000
    std::vector<ObservationOutcome> obs{
        outcome("A", MdgGroup::developing, 2000, 0.012, 0.010, 0.008, 0.011, 1000, 20000),
        outcome("B", MdgGroup::developing, 2001, 0.009, 0.010, 0.008, 0.012, 1000, 20000),
        outcome("C", MdgGroup::developing, 2002, 0.006, 0.008, 0.007, 0.010, 1000, 20000),
        outcome("D", MdgGroup::developing, 2003, 0.011, 0.010, 0.009, 0.012, 1000, 20000),
    };
    // errors: 10, -5, -10, 5; relative: 20, -10, -25, 10
    CHECK(obs[0].error() == doctest::Approx(10.0));
    CHECK(obs[2].relative_error() == doctest::Approx(-25.0));
    auto r = validation_metrics(Exercise::random_20pct, obs, {});
    REQUIRE(r.groups.size() == 2);
    const auto& dev = r.groups[1];
    CHECK(dev.group == MdgGroup::developing);
    CHECK(dev.n == 4);
    CHECK(dev.me == doctest::Approx(0.0));
    CHECK(dev.mae == doctest::Approx(7.5));
    CHECK(dev.mre == doctest::Approx(0.0));
    CHECK(dev.mare == doctest::Approx(15.0));
    CHECK(dev.pct_above == doctest::Approx(25.0));
    CHECK(dev.pct_below == doctest::Approx(25.0));
    CHECK(dev.pct_inside == doctest::Approx(50.0));
    CHECK(r.groups[0].n == 0);

    // ordering invariance
    std::reverse(obs.begin(), obs.end());
    auto r2 = validation_metrics(Exercise::random_20pct, obs, {});
    CHECK(r2.groups[1].mare == dev.mare);
}

TEST_CASE("perfect predictions give zero error and full coverage") {
    std::vector<ObservationOutcome> obs;
    for (int i = 0; i < 6; ++i) {
        double y = 0.005 + 0.001 * i;
        obs.push_back(outcome("X" + std::to_string(i), i % 2 ? MdgGroup::developed : MdgGroup::developing, 2000 + i, y, y,
                              y * 0.9, y * 1.1, 500, 9000));
    }
    auto r = validation_metrics(Exercise::random_20pct, obs, {});
    for (const auto& g : r.groups) {
        CHECK(g.me == 0.0);
        CHECK(g.mare == 0.0);
        CHECK(g.pct_inside == 100.0);
    }
}

TEST_CASE("exercise II keeps the most recent observation per country and compares estimates") {
    std::vector<ObservationOutcome> obs{
        outcome("A", MdgGroup::developing, 2008.5, 0.01, 0.01, 0.009, 0.011, 1, 1),
        outcome("A", MdgGroup::developing, 2010.5, 0.01, 0.01, 0.009, 0.011, 1, 1),
        outcome("B", MdgGroup::developed, 2007.5, 0.01, 0.01, 0.009, 0.011, 1, 1),
    };
    keep_most_recent(obs);
    CHECK_FALSE(obs[0].used);
    CHECK(obs[1].used);
    CHECK(obs[2].used);

    std::vector<EstimateOutcome> est(3);
    est[0] = {"A", MdgGroup::developing, 200, 180, 150, 210};
    est[1] = {"C", MdgGroup::developing, 100, 130, 110, 160};
    est[2] = {"B", MdgGroup::developed, 10, 10, 8, 12};
    auto r = validation_metrics(Exercise::after_2007, obs, est);
    const auto& dev = r.groups[1];
    CHECK(dev.n == 1);
    CHECK(dev.n_countries == 2);
    // errors 20 and -30, relative 10% and -30%
    CHECK(*dev.est_me == doctest::Approx(-5.0));
    CHECK(*dev.est_mae == doctest::Approx(25.0));
    CHECK(*dev.est_mre == doctest::Approx(-10.0));
    CHECK(*dev.est_mare == doctest::Approx(20.0));
    CHECK(*dev.est_pct_below == doctest::Approx(50.0));
    CHECK(*dev.est_pct_above == doctest::Approx(0.0));
    CHECK(*r.groups[0].est_me == 0.0);
}
