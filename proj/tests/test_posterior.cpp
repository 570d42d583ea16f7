#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bmat/posterior.hpp"
#include "model_fixture.hpp"

using namespace bmat;

TEST_CASE("quantiles use linear interpolation between order statistics") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    std::reverse(v.begin(), v.end());
    auto q = summarize_values(v);
    CHECK(q.median == doctest::Approx(50.5).epsilon(1e-14));
    CHECK(q.q10 == doctest::Approx(10.9).epsilon(1e-14));
    CHECK(q.q90 == doctest::Approx(90.1).epsilon(1e-14));

    auto c = summarize_values(std::vector<double>(7, 0.25));
    CHECK(c.median == 0.25);
    CHECK(c.q10 == 0.25);
    CHECK(c.q90 == 0.25);
    CHECK_THROWS(summarize_values({}));
}

TEST_CASE("observation interval hand case") {
    IntervalInput in;
    in.y = 0.02;
    in.sigma_hat = 0.2;
    in.deaths_per_birth = 0.05;
    auto r = observation_interval(in);
    CHECK(std::abs(r.pm.lower - 0.01547) < 1e-5);
    CHECK(std::abs(r.pm.upper - 0.02585) < 1e-5);
    CHECK(r.pm.lower == doctest::Approx(0.02 * std::exp(-0.25632)).epsilon(1e-12));
    CHECK(r.mmr.lower == r.pm.lower * 0.05);
    CHECK(r.mmr.upper == r.pm.upper * 0.05);
}

TEST_CASE("observation interval edge cases") {
    IntervalInput in;
    in.y = 0.01;
    in.gamma_hat = 1.5;
    in.sigma_hat = 0.0;
    auto r = observation_interval(in);
    CHECK(r.pm.lower == doctest::Approx(0.015));
    CHECK(r.pm.upper == r.pm.lower);

    double prev = 0;
    for (double s : {0.05, 0.1, 0.2, 0.4, 0.8}) {
        in.sigma_hat = s;
        auto k = observation_interval(in);
        CHECK(k.pm.upper - k.pm.lower > prev);
        prev = k.pm.upper - k.pm.lower;
    }

    // pregnancy-related: omega * (v - AIDS pregnancy share) + AIDS maternal share
    in.sigma_hat = 0.0;
    in.gamma_hat = 1.1;
    in.definition = Definition::pregnancy_related;
    in.omega_hat = 0.85;
    in.aids_preg_pm = 0.002;
    in.aids_maternal_pm = 0.001;
    auto p = observation_interval(in);
    CHECK(p.pm.lower == doctest::Approx(0.85 * (0.011 - 0.002) + 0.001).epsilon(1e-12));
}

namespace {

ModelData small_data() {
    return build_model_data({fixture::observation("C1", 2001, 2002, 0.004, SourceType::specialized_study, 0.1),
                             fixture::observation("C2", 2003, 2005, 0.006, SourceType::misc_maternal, 0.2)},
                            fixture::envelopes(2, 2000, 2006, 12.0), {2000, 2006, 2002}, {});
}

}  // namespace

TEST_CASE("summaries of derived quantities") {
    auto data = small_data();
    auto s = fixture::reasonable_state(data);
    std::vector<ModelState> states(5, s);
    for (std::size_t k = 0; k < states.size(); ++k) states[k].alpha_country[0] += 0.05 * double(k);
    std::vector<const ModelState*> ptrs;
    for (const auto& st : states) ptrs.push_back(&st);
    auto table = summarize(ptrs, data);

    // the middle state is the median for monotone quantities
    auto dq = assemble_mmr(states[2], data);
    for (int y = 2000; y <= 2006; ++y) {
        auto j = static_cast<std::size_t>(y - 2000);
        const auto* mmr = table.find("C1", y, "mmr");
        const auto* pm = table.find("C1", y, "pm");
        const auto* md = table.find("C1", y, "maternal_deaths");
        REQUIRE(mmr);
        REQUIRE(pm);
        REQUIRE(md);
        CHECK(mmr->q.median == doctest::Approx(dq.countries[0].mmr[j] * kMmrScale).epsilon(1e-12));
        CHECK(md->q.median == doctest::Approx(dq.countries[0].deaths[j]).epsilon(1e-12));
        // MMR = PM * D / B
        CHECK(mmr->q.median ==
              doctest::Approx(pm->q.median * data.countries[0].deaths[j] / data.countries[0].births[j] * kMmrScale)
                  .epsilon(1e-12));
        CHECK(mmr->q.q10 <= mmr->q.median);
        CHECK(mmr->q.median <= mmr->q.q90);
        // country 2 is constant across states
        const auto* c2 = table.find("C2", y, "mmr");
        CHECK(c2->q.q10 == c2->q.q90);
    }
    // pooled summaries ignore state order
    std::reverse(ptrs.begin(), ptrs.end());
    auto again = summarize(ptrs, data);
    REQUIRE(again.rows.size() == table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) CHECK(again.rows[i].q.median == table.rows[i].q.median);
}

TEST_CASE("observation intervals from posterior draws") {
    auto data = small_data();
    auto s = fixture::reasonable_state(data);
    s.sigma_notdhs = 0.3;
    std::vector<const ModelState*> ptrs{&s};
    auto rows = observation_intervals(ptrs, data);
    REQUIRE(rows.size() == 2);
    // misc record combines sampling error with the non-sampling sd
    CHECK(rows[1].sigma_hat == doctest::Approx(std::sqrt(0.04 + 0.09)));
    CHECK(rows[1].gamma_hat == doctest::Approx(1.1));
    CHECK(rows[0].sigma_hat == doctest::Approx(0.1));
    CHECK(rows[0].interval.pm.lower == doctest::Approx(0.004 * std::exp(-kZ90 * 0.1)));
    CHECK_THROWS(observation_intervals({}, data));
}
