#include "bmat/epi.hpp"

#include <string>

#include "bmat/errors.hpp"

namespace bmat {

void AidsParams::validate() const {
    if (!(relative_risk > 0)) throw InputError("aids.R must be positive");
    if (!(p_mat_given_aids_preg >= 0 && p_mat_given_aids_preg <= 1)) {
        throw InputError("aids.P_mat_given_apreg must lie in [0,1]");
    }
    if (!(woman_years_per_birth > 0)) throw InputError("aids.F must be positive");
}

double prop_aids_in_maternal_risk(double gfr, const AidsParams& p) {
    if (gfr < 0) throw InputError("gfr must be nonnegative");
    const double fg = p.woman_years_per_birth * gfr;
    const double denom = 1.0 + fg * (p.relative_risk - 1.0);
    if (!(denom > 0)) {
        throw InputError("maternal risk share undefined: 1 + F(R-1)gfr = " + std::to_string(denom) + " <= 0");
    }
    return fg * p.relative_risk / denom;
}

double aids_maternal_deaths(double aids_deaths, double gfr, const AidsParams& p) {
    return pregnancy_related_aids_deaths(aids_deaths, gfr, p) * p.p_mat_given_aids_preg;
}

double pregnancy_related_aids_deaths(double aids_deaths, double gfr, const AidsParams& p) {
    if (aids_deaths < 0) throw InputError("aids deaths must be nonnegative");
    if (aids_deaths == 0) return 0.0;
    return aids_deaths * prop_aids_in_maternal_risk(gfr, p);
}

}  // namespace bmat
