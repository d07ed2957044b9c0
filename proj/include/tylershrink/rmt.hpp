#pragma once

#include "tylershrink/model.hpp"

namespace tylershrink {

struct BisectOptions {
    double tolerance = 1e-12;  // absolute residual of the defining equation
    int max_iterations = 400;
};

// Unique gamma > 0 with (1/N) sum_i lambda_i / (gamma rho + (1-rho) lambda_i) = 1.
// The map is strictly decreasing in gamma; solved by bracketing bisection.
double solve_gamma(const CovarianceModel& model, double rho, const BisectOptions& opt = {});

// rho_bar = rho / (rho + (1/gamma) (1-rho)/(1-(1-rho) c)).
double rho_bar(double rho, double c, double gamma);

// Unique m > 0 with m (rho_bar + c (1/N) sum_i (1-rho_bar) lambda_i /
// (1 + (1-rho_bar) lambda_i m)) = 1, i.e. the Stieltjes transform m(-rho_bar)
// of the limiting spectral law on the positive real branch.
double solve_stieltjes(const CovarianceModel& model, double rho_bar, double c,
                       const BisectOptions& opt = {});

// Asymptotic variance of the sqrt(N)-scaled detector under H0:
//   sigma^2 = (1/2) p* C Q^2 p /
//             [ p* Q p . (1/N) tr(C Q) . (1 - c (1-rho_bar)^2 m^2 (1/N) tr(C^2 Q^2)) ]
// with Q = (I + (1-rho_bar) m C)^{-1}, evaluated through the eigenbasis of C.
double theoretical_sigma2(const CovarianceModel& model, const SteeringVector& p,
                          double rho_bar, double m, double c);

// P(R > gamma) = exp(-gamma^2 / (2 sigma^2)) for R Rayleigh with parameter sigma.
double rayleigh_tail(double gamma_threshold, double sigma2);

// All scalar theory quantities for a given (C, p, c, rho).
struct TheoryContext {
    double c = 0.0;
    double rho = 0.0;
    double gamma = 0.0;
    double alpha = 0.0;     // (1-rho)/(1-(1-rho) c)
    double rho_bar = 0.0;
    double m = 0.0;         // m(-rho_bar) > 0
    double sigma2 = 0.0;
};

TheoryContext build_theory_context(const CovarianceModel& model, const SteeringVector& p,
                                   double c, double rho);

}  // namespace tylershrink
