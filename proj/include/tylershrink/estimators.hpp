#pragma once

#include <optional>

#include "tylershrink/model.hpp"

namespace tylershrink {

// Shrinkage parameter rho restricted to R_kappa = [kappa + max{0, 1 - n/N}, 1].
struct ShrinkageParam {
    double rho = 0.0;
    double lower_bound = 0.0;  // max{0, 1 - n/N}
    double kappa = 1e-3;

    // Validates membership in R_kappa; throws RhoOutOfRange.
    static ShrinkageParam make(double rho, int dim, int count, double kappa = 1e-3);
};

struct SolverConfig {
    double tolerance = 1e-9;  // relative Frobenius change between iterates
    int max_iterations = 200;
};

// Converged robust-shrinkage scatter estimate with solver diagnostics.
// matrix >= rho I and the fixed-point residual is below 10x tolerance.
struct ScatterEstimate {
    double rho = 0.0;
    Matrix matrix;
    int iterations_used = 0;
    double final_residual = 0.0;  // ||C - RHS(C)||_F / ||C||_F at the returned matrix
};

// Picard iteration for
//   C = (1 - rho) (1/n) sum_i x_i x_i^* / ((1/N) x_i^* C^{-1} x_i) + rho I
// started from the identity (or `initial` when given, e.g. for uniqueness probes).
ScatterEstimate robust_shrinkage_fit(const Dataset& data, const ShrinkageParam& rho,
                                     const SolverConfig& cfg = {},
                                     const std::optional<Matrix>& initial = std::nullopt);

// (1/n) sum_i x_i x_i^*
Matrix sample_covariance(const Dataset& data);

// Deterministic equivalent S_hat(rho) built from the ground-truth z_i
// (simulation only):
//   S_hat = (1/gamma) (1-rho)/(1-(1-rho) c) (1/n) sum z_i z_i^* + rho I.
Matrix deterministic_equivalent(const Dataset& truth, double gamma, double rho, double c);

// Underline variant S(rho_bar) = (1 - rho_bar) (1/n) sum z_i z_i^* + rho_bar I.
Matrix deterministic_equivalent_underline(const Dataset& truth, double rho_bar);

}  // namespace tylershrink
