#pragma once

namespace bmat {

// Fixed constants of the AIDS maternal deaths model.
struct AidsParams {
    double relative_risk = 0.3;        // R, pregnant vs non-pregnant HIV-positive women
    double p_mat_given_aids_preg = 0.3;  // share of AIDS deaths in the maternal risk period that count as maternal
    double woman_years_per_birth = 1.0;  // F

    void validate() const;
};

// Share of AIDS deaths falling in the maternal risk period:
// F*R*gfr / (1 + F*(R-1)*gfr). Throws InputError when the denominator is not positive.
double prop_aids_in_maternal_risk(double gfr, const AidsParams& p);

// D^(AIDS&Mat) = D^(AIDS) * prop_aids_in_maternal_risk * P^(mat|a,preg)
double aids_maternal_deaths(double aids_deaths, double gfr, const AidsParams& p);

// D^(AIDS&Preg) = D^(AIDS) * prop_aids_in_maternal_risk
double pregnancy_related_aids_deaths(double aids_deaths, double gfr, const AidsParams& p);

}  // namespace bmat
