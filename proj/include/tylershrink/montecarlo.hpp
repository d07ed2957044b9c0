#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tylershrink/detector.hpp"
#include "tylershrink/rmt.hpp"

namespace tylershrink {

// One reproducible false-alarm experiment: outer trials draw fresh secondary
// data x_1..x_n and fit C_hat(rho) per grid point; inner trials draw fresh H0
// observations y and score the detector. Streams are keyed by
// (seed, outer index, inner index), so results are independent of thread count.
struct TrialPlan {
    CovarianceModel model;
    SteeringVector steering;
    int count = 0;                    // n
    TextureModel texture;
    std::vector<double> rho_grid;
    std::vector<double> gammas;       // thresholds for sqrt(N) T
    std::vector<double> big_gammas;   // unscaled thresholds Gamma (adaptive-rho mode)
    int outer_trials = 200;
    int inner_trials = 500;
    std::uint64_t seed = 1;
    double kappa = 1e-3;
    SolverConfig solver;
    bool collect_samples = false;     // keep per-rho samples of sqrt(N) T
};

struct FarPoint {
    double rho = 0.0;
    double gamma = 0.0;
    double empirical = 0.0;
    double stderr_ = 0.0;       // sqrt(p(1-p)/trials)
    double theory = 0.0;        // exp(-gamma^2 / (2 sigma^2(rho)))
    double plugin_mean = 0.0;   // mean over outer trials of exp(-gamma^2 / (2 sigma2_hat))
    double plugin_std = 0.0;
};

// False-alarm rate of the detector run at the per-trial selected rho_star.
struct AdaptiveFarPoint {
    double threshold = 0.0;     // gamma (scaled) or Gamma (unscaled)
    double empirical = 0.0;
    double stderr_ = 0.0;
    double predicted_mean = 0.0;  // mean of exp(-threshold^2/(2 sigma2_hat(rho_star))), suitably scaled
    double predicted_std = 0.0;
};

struct FarSweepResult {
    std::vector<FarPoint> points;                   // rho-major, gamma-minor
    std::vector<AdaptiveFarPoint> adaptive;          // per gamma in `gammas`
    std::vector<AdaptiveFarPoint> adaptive_unscaled; // per Gamma in `big_gammas`
    std::vector<double> rho_star;                    // per successful outer trial
    std::vector<double> sigma2_hat_mean;             // per rho
    std::vector<double> sigma2_hat_std;              // per rho
    std::vector<double> rho_bar_hat_mean;            // per rho
    std::vector<double> theory_sigma2;               // per rho
    std::vector<std::vector<double>> scaled_samples; // per rho, if collect_samples
    long long effective_trials = 0;
    int failed_trials = 0;
};

FarSweepResult run_far_sweep(const TrialPlan& plan, int threads = 0);

struct HistogramBin {
    double left = 0.0;
    double density = 0.0;
    double rayleigh_density = 0.0;
};

// Exact one-sample Kolmogorov-Smirnov distance against Rayleigh(sigma), plus
// the fixed-width histogram (0.1 over [0, 5]) and CDF samples at bin edges.
struct FitDiagnostics {
    double ks = 1.0;
    std::vector<HistogramBin> histogram;
    std::vector<std::array<double, 3>> cdf;  // t, empirical, rayleigh
};

FitDiagnostics ks_distance_vs_rayleigh(std::vector<double> samples, double sigma);

// Convergence-rate probe: per size N, median over seeds of the spectral-norm
// gap ||C_hat - S_hat|| and of the bilinear gaps |p*(C_hat^k - S_hat^k)p| for
// k in {-2, -1, 1, 2}, with least-squares log-log slopes across sizes.
struct ProbeConfig {
    std::vector<int> sizes{50, 100, 200, 400};
    double rho = 0.5;
    double c = 0.5;
    double toeplitz_a = 0.7;
    int num_seeds = 20;
    std::uint64_t seed = 1;
    SolverConfig solver;
};

inline constexpr std::array<int, 4> kProbePowers{-2, -1, 1, 2};

struct RatePoint {
    int dim = 0;
    double norm_gap = 0.0;
    std::array<double, 4> bilinear_gap{};  // medians, k order as kProbePowers
};

struct RateReport {
    std::vector<RatePoint> points;
    double norm_slope = 0.0;
    std::array<double, 4> bilinear_slope{};
};

RateReport convergence_probe(const ProbeConfig& cfg, int threads = 0);

// Accuracy of the plug-in variance across the rho grid: moments of sigma2_hat
// and of the predicted false-alarm rate per trial, against the theory values.
struct EstimatorErrorRow {
    double rho = 0.0;
    double rho_bar_hat_mean = 0.0;
    double sigma2_hat_mean = 0.0;
    double sigma2_hat_std = 0.0;
    double sigma2_hat_median_rel_err = 0.0;  // median over trials of |s2h - s2|/s2
    double sigma2_theory = 0.0;
    std::vector<double> plugin_far_mean;  // per gamma
    std::vector<double> plugin_far_std;
};

struct EstimatorErrorReport {
    std::vector<double> gammas;
    std::vector<EstimatorErrorRow> rows;
    int failed_trials = 0;
};

// Ignores plan.inner_trials (no detector trials are run).
EstimatorErrorReport estimator_error_sweep(const TrialPlan& plan, int threads = 0);

}  // namespace tylershrink
