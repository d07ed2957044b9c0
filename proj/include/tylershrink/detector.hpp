#pragma once

#include <complex>
#include <vector>

#include "tylershrink/estimators.hpp"

namespace tylershrink {

// GLRT statistic T = |y* C^{-1} p| / sqrt(y* C^{-1} y . p* C^{-1} p) in [0, 1].
struct GlrtStatistic {
    double rho = 0.0;
    double value = 0.0;
    std::complex<double> y_cinv_p;
    double y_cinv_y = 0.0;
    double p_cinv_p = 0.0;
};

GlrtStatistic glrt_statistic(const Vector& y, const SteeringVector& p,
                             const ScatterEstimate& est);

// Strict exceedance T > Gamma.
bool decide(const GlrtStatistic& stat, double threshold);

// Consistent estimate of rho_bar from data alone: rho / ((1/N) tr C_hat(rho)).
double empirical_rho_bar(const ScatterEstimate& est);

// Plug-in variance estimate (rho < 1):
//   sigma2_hat = (1/2) [1 - rho_bar (p* C^{-2} p / p* C^{-1} p) (1/N) tr C] /
//     [(1 - c + c rho_bar (1/N) tr C^{-1} (1/N) tr C)(1 - rho_bar (1/N) tr C^{-1} (1/N) tr C)]
// with every trace and quadratic form taken from one factorization of C = C_hat(rho).
double empirical_sigma2(const ScatterEstimate& est, const SteeringVector& p,
                        double rho_bar, double c);

// rho = 1 endpoint (l'Hospital limit), with texture removed by normalizing each
// sample to z-proxies sqrt(N) x_i / ||x_i||:
//   sigma2_hat(1) = (1/2) p* G p / ((1/N) tr G),  G = (1/n) sum z_i z_i^*.
double empirical_sigma2_at_one(const Dataset& data, const SteeringVector& p);

// Exact-truth variant of the above (simulation only, for tests).
double empirical_sigma2_at_one_truth(const Dataset& data, const SteeringVector& p);

// Data-driven shrinkage sweep over a grid in R_kappa.
struct RhoSweepResult {
    std::vector<double> grid;
    std::vector<double> rho_bar_hat;  // NaN where the point failed
    std::vector<double> sigma2_hat;   // NaN where the point failed
    std::vector<bool> ok;
    int selected_index = -1;
    double rho_star = 0.0;
};

// Fits C_hat(rho) per grid point (warm-started along the grid), evaluates the
// plug-in variance, and selects the argmin; ties go to the smallest rho and the
// rho = 1 endpoint uses the l'Hospital limit. Per-point failures are recorded;
// AllPointsFailed if nothing succeeded.
RhoSweepResult select_rho_star(const Dataset& data, const SteeringVector& p,
                               const std::vector<double>& grid, const SolverConfig& cfg = {},
                               double kappa = 1e-3);

}  // namespace tylershrink
