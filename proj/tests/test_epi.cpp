#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bmat/epi.hpp"
#include "bmat/errors.hpp"

using namespace bmat;

TEST_CASE("share of AIDS deaths in the maternal risk period") {
    AidsParams p;
    CHECK(prop_aids_in_maternal_risk(0.0, p) == 0.0);
    CHECK(prop_aids_in_maternal_risk(0.1, p) == doctest::Approx(0.03 / 0.93).epsilon(1e-14));
    AidsParams unit = p;
    unit.relative_risk = 1.0;
    for (double g : {0.01, 0.1, 0.3}) CHECK(prop_aids_in_maternal_risk(g, unit) == doctest::Approx(g));
}

TEST_CASE("share is increasing in gfr") {
    AidsParams p;
    double prev = -1;
    for (double g = 0.0; g < 1.0; g += 0.01) {
        double v = prop_aids_in_maternal_risk(g, p);
        CHECK(v > prev);
        CHECK(v < 1.0);
        prev = v;
    }
}

TEST_CASE("denominator guard") {
    AidsParams p;
    p.woman_years_per_birth = 10.0;
    CHECK_THROWS_AS(prop_aids_in_maternal_risk(0.2, p), InputError);
}

TEST_CASE("AIDS maternal and pregnancy-related deaths") {
    AidsParams p;
    CHECK(aids_maternal_deaths(0.0, 0.1, p) == 0.0);
    CHECK(aids_maternal_deaths(1000, 0.1, p) == doctest::Approx(1000 * 0.03 / 0.93 * 0.3).epsilon(1e-14));
    CHECK(aids_maternal_deaths(1000, 0.1, p) == doctest::Approx(9.677).epsilon(1e-4));
    CHECK(pregnancy_related_aids_deaths(1000, 0.1, p) == doctest::Approx(32.258).epsilon(1e-4));
    CHECK(pregnancy_related_aids_deaths(1000, 0.0, p) == 0.0);
    AidsParams zero = p;
    zero.p_mat_given_aids_preg = 0.0;
    CHECK(aids_maternal_deaths(1000, 0.1, zero) == 0.0);
    double ratio = pregnancy_related_aids_deaths(500, 0.07, p) / aids_maternal_deaths(500, 0.07, p);
    CHECK(ratio == doctest::Approx(1.0 / p.p_mat_given_aids_preg).epsilon(1e-14));
}

TEST_CASE("ordering maternal <= pregnancy-related <= all AIDS deaths") {
    AidsParams p;
    for (double g : {0.01, 0.05, 0.2, 0.5}) {
        for (double d : {0.0, 1.0, 250.0}) {
            double m = aids_maternal_deaths(d, g, p), pr = pregnancy_related_aids_deaths(d, g, p);
            CHECK(m <= pr);
            CHECK(pr <= d);
        }
    }
}

TEST_CASE("invalid parameters are rejected") {
    AidsParams p;
    p.relative_risk = 0.0;
    CHECK_THROWS_AS(p.validate(), InputError);
    AidsParams q;
    q.p_mat_given_aids_preg = 1.5;
    CHECK_THROWS_AS(q.validate(), InputError);
}
