#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bmat/vr_preprocess.hpp"
#include "test_util.hpp"
#include "vr_cases.hpp"

using namespace bmat;

TEST_CASE("hand-labeled vr preprocessing cases") {
    for (const auto& c : vrcases::all_cases()) {
        CAPTURE(c.name);
        CHECK(c.check() == "");
    }
}

TEST_CASE("point mass is nondecreasing in usability for type II") {
    for (double g : {1.2, 1.5, 2.0, 2.7}) {
        double prev = -1;
        for (double u = 0.61; u <= 0.8; u += 0.01) {
            auto e = gamma_prior_envelope(g, u, VrType::II);
            CHECK(e.g_upper >= g);
            CHECK(e.g_upper <= kMaxAdjustment);
            CHECK(e.point_mass >= prev - 1e-15);
            prev = e.point_mass;
        }
    }
}

TEST_CASE("type III envelope uses the full range up to 3") {
    auto e = gamma_prior_envelope(1.5, 0.3, VrType::III);
    CHECK(e.g_upper == 3.0);
    // base min{1, g - 0.5} = 1
    CHECK(e.point_mass == doctest::Approx((1.5 - 1.0) / (3.0 - 1.0)));
}

TEST_CASE("vr total error approaches the binomial delta-method limit") {
    VrErrorConfig cfg;
    cfg.draws = 10000;
    cfg.multiplier_sd = 0.0;
    const double d = 1e7, y = 0.05, g = 1.5;
    // with no spread the multiplier equals g, so deaths are drawn at the observed PM
    const double p = y;
    double sigma = vr_total_error(d, y, g, VrType::II, 99, cfg);
    double expected = std::sqrt((1 - p) / (d * p));
    CHECK(std::abs(sigma / expected - 1.0) < 0.05);
}

TEST_CASE("vr total error is seeded") {
    CHECK(vr_total_error(5000, 0.01, 1.5, VrType::II, 7) == vr_total_error(5000, 0.01, 1.5, VrType::II, 7));
    CHECK(vr_total_error(5000, 0.01, 1.5, VrType::II, 7) != vr_total_error(5000, 0.01, 1.5, VrType::II, 8));
}

namespace {

EnvelopeTable env_for(const std::string& code, int first, int last) {
    std::vector<CountryYearEnvelope> rows;
    for (int y = first; y <= last; ++y) {
        CountryYearEnvelope e;
        e.country = code;
        e.year = y;
        e.births = 60000;
        e.deaths = 3000;
        e.gdp = 10000;
        e.gfr = 0.05;
        e.sab = 0.9;
        e.region = "R";
        e.mdg_group = MdgGroup::developed;
        rows.push_back(e);
    }
    return EnvelopeTable(rows);
}

Observation vr(std::size_t row, int year, double m, double d, double p_ill) {
    auto o = vrcases::vr_obs(row, year, m, d);
    o.prop_ill_defined = p_ill;
    o.env_deaths = 3000;
    o.env_births = 60000;
    return o;
}

}  // namespace

TEST_CASE("preprocess classifies, merges and reports every vr row") {
    auto env = env_for("AAA", 1985, 2015);
    std::vector<Observation> obs;
    std::size_t row = 1;
    for (int y = 2000; y <= 2005; ++y) obs.push_back(vr(row++, y, y == 2003 ? 0 : 3, 2900, 0.05));
    obs.push_back(vr(row++, 2010, 2, 1500, 0.1));  // isolated and incomplete
    PreprocessConfig cfg;
    auto res = preprocess(obs, env, cfg);

    CHECK(res.report.size() == obs.size());
    int merged = 0, excluded = 0;
    for (const auto& r : res.report) {
        merged += r.action.rfind("merged", 0) == 0;
        excluded += r.action.rfind("excluded", 0) == 0;
    }
    CHECK(merged == 1);
    CHECK(excluded == 1);
    CHECK(res.observations.size() == 5);
    for (const auto& p : res.observations) {
        CHECK(p.obs.vr_type == VrType::I);
        CHECK(p.g == 1.5);
        CHECK(p.point_mass == 1.0);
        CHECK(p.sigma <= 0.5);
    }
    double d = 0;
    for (const auto& p : res.observations) d += *p.obs.all_cause_deaths;
    CHECK(d == doctest::Approx(5 * 2900.0 + 2900.0 - 0.0));
}

TEST_CASE("study ratio sets the schedule and drops overlapping vr") {
    auto env = env_for("AAA", 1985, 2015);
    std::vector<Observation> obs;
    std::size_t row = 1;
    for (int y = 2000; y <= 2008; ++y) obs.push_back(vr(row++, y, 3, 2900, 0.05));
    Observation s = vrcases::study(2004, 2005);
    s.row = row++;
    s.maternal_deaths = 6;
    s.y = 6.0 / 3000.0;
    s.env_deaths = 3000;
    s.env_births = 60000;
    s.sampling_error = 0.1;
    obs.push_back(s);
    auto res = preprocess(obs, env, {});
    const auto& sched = res.schedules.at("AAA");
    REQUIRE(sched.study_ratios.size() == 1);
    // study PM 0.002 against VR PM 3/2900 in 2004
    double ratio = (6.0 / 3000.0) / (3.0 / 2900.0);
    CHECK(sched.at(2004) == doctest::Approx(ratio));
    CHECK(sched.at(2015) == doctest::Approx(ratio));
    bool vr2004 = false;
    for (const auto& p : res.observations) vr2004 |= p.obs.is_vr() && p.obs.start == 2004;
    CHECK_FALSE(vr2004);
}

TEST_CASE("model input round trips") {
    auto env = env_for("AAA", 1985, 2015);
    std::vector<Observation> obs;
    for (int y = 2000; y <= 2003; ++y) obs.push_back(vr(static_cast<std::size_t>(y - 1999), y, 3, 2500, 0.05));
    auto res = preprocess(obs, env, {});
    testutil::TempDir dir("pre");
    write_model_input(dir / "m.csv", res.observations);
    auto back = read_model_input(dir / "m.csv");
    REQUIRE(back.size() == res.observations.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].sigma == res.observations[i].sigma);
        CHECK(back[i].g_upper == res.observations[i].g_upper);
        CHECK(back[i].obs.y == res.observations[i].obs.y);
        CHECK(back[i].obs.vr_type == res.observations[i].obs.vr_type);
    }
}
