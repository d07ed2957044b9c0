#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tylershrink/errors.hpp"
#include "tylershrink/montecarlo.hpp"

using namespace tylershrink;

namespace {

TrialPlan small_plan(std::uint64_t seed = 1) {
    TrialPlan plan;
    plan.model = CovarianceModel::toeplitz_ar(0.7, 16);
    plan.steering = uniform_steering(16);
    plan.count = 32;
    plan.rho_grid = {0.3, 0.7, 1.0};
    plan.gammas = {0.5, 1.0, 2.0, 3.0};
    plan.outer_trials = 6;
    plan.inner_trials = 40;
    plan.seed = seed;
    plan.collect_samples = true;
    return plan;
}

// two-sample Kolmogorov-Smirnov with the asymptotic Kolmogorov p-value
double two_sample_ks_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    const double ne = double(a.size()) * b.size() / (a.size() + b.size());
    const double lambda = std::sqrt(ne) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace

TEST_SUITE_BEGIN("montecarlo");

TEST_CASE("gamma = 0 is exceeded almost surely") {
    auto plan = small_plan();
    plan.gammas = {0.0};
    auto result = run_far_sweep(plan, 1);
    for (const auto& pt : result.points) CHECK(pt.empirical == 1.0);
}

TEST_CASE("results are identical for 1 and 2 worker threads") {
    auto plan = small_plan(17);
    auto a = run_far_sweep(plan, 1);
    auto b = run_far_sweep(plan, 2);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t k = 0; k < a.points.size(); ++k) {
        CHECK(a.points[k].empirical == b.points[k].empirical);
        CHECK(a.points[k].plugin_mean == b.points[k].plugin_mean);
        CHECK(a.points[k].plugin_std == b.points[k].plugin_std);
        CHECK(a.points[k].theory == b.points[k].theory);
    }
    CHECK(a.rho_star == b.rho_star);
    CHECK(a.scaled_samples == b.scaled_samples);

    auto c = run_far_sweep(plan, 2);
    CHECK(b.points.size() == c.points.size());
    for (std::size_t k = 0; k < b.points.size(); ++k)
        CHECK(b.points[k].empirical == c.points[k].empirical);
}

TEST_CASE("empirical FAR decreases in gamma and stderr follows the binomial formula") {
    auto plan = small_plan(23);
    auto result = run_far_sweep(plan, 2);
    const std::size_t num_gamma = plan.gammas.size();
    for (std::size_t j = 0; j < plan.rho_grid.size(); ++j) {
        for (std::size_t g = 0; g < num_gamma; ++g) {
            const auto& pt = result.points[j * num_gamma + g];
            CHECK(pt.empirical >= 0.0);
            CHECK(pt.empirical <= 1.0);
            if (g > 0) CHECK(pt.empirical <= result.points[j * num_gamma + g - 1].empirical);
            const double expected_se =
                std::sqrt(pt.empirical * (1.0 - pt.empirical) / result.effective_trials);
            CHECK(pt.stderr_ == doctest::Approx(expected_se).epsilon(1e-12));
        }
    }
    CHECK(result.effective_trials == plan.outer_trials * plan.inner_trials);
    CHECK(result.failed_trials == 0);
}

TEST_CASE("collected samples drive the histogram and KS diagnostics") {
    auto plan = small_plan(31);
    plan.rho_grid = {0.5};
    plan.outer_trials = 10;
    plan.inner_trials = 100;
    auto result = run_far_sweep(plan, 2);
    REQUIRE(result.scaled_samples.size() == 1);
    REQUIRE(result.scaled_samples[0].size() == 1000);

    auto diag = ks_distance_vs_rayleigh(result.scaled_samples[0],
                                        std::sqrt(result.theory_sigma2[0]));
    CHECK(diag.ks > 0.0);
    CHECK(diag.ks < 0.2);
    CHECK(diag.histogram.size() == 50);
    double mass = 0.0;
    for (const auto& bin : diag.histogram) mass += bin.density * 0.1;
    CHECK(mass <= 1.0 + 1e-12);
    CHECK(mass > 0.9);  // nearly all samples land in [0, 5]
}

TEST_CASE("KS self-test against exact Rayleigh draws") {
    const double sigma = 0.8;
    RngStream rng(99);
    std::vector<double> samples;
    for (int k = 0; k < 10000; ++k)
        samples.push_back(sigma * std::sqrt(-2.0 * std::log(rng.uniform())));
    auto diag = ks_distance_vs_rayleigh(samples, sigma);
    CHECK(diag.ks <= 0.02);

    std::vector<double> constant(150, 5.0 * sigma);
    CHECK(ks_distance_vs_rayleigh(constant, sigma).ks > 0.99);

    CHECK_THROWS_AS(ks_distance_vs_rayleigh(std::vector<double>(10, 1.0), sigma), Error);
    CHECK_THROWS_AS(ks_distance_vs_rayleigh(samples, 0.0), Error);
}

TEST_CASE("full-pipeline texture invariance of the detector law") {
    auto base = small_plan(41);
    base.model = CovarianceModel::toeplitz_ar(0.7, 20);
    base.steering = uniform_steering(20);
    base.count = 40;
    base.rho_grid = {0.2};
    base.gammas = {2.0};
    base.outer_trials = 8;
    base.inner_trials = 250;

    auto unit = run_far_sweep(base, 2);
    auto heavy_plan = base;
    heavy_plan.texture = TextureModel::inverse_gamma(2.1);
    heavy_plan.seed = 42;  // independent draws, same law up to texture
    auto heavy = run_far_sweep(heavy_plan, 2);

    const double p = two_sample_ks_pvalue(unit.scaled_samples[0], heavy.scaled_samples[0]);
    CHECK(p > 0.01);
}

TEST_CASE("empirical FAR sits within 4 stderr of the asymptotic theory at N=100" *
          doctest::timeout(600)) {
    // 1e4 effective trials: the resolution at which the finite-N tail bias is
    // inside the Monte Carlo noise band
    TrialPlan plan;
    plan.model = CovarianceModel::toeplitz_ar(0.7, 100);
    plan.steering = uniform_steering(100);
    plan.count = 200;
    plan.rho_grid = {0.2, 0.3, 0.5};
    plan.gammas = {2.0, 3.0};
    plan.outer_trials = 50;
    plan.inner_trials = 200;
    plan.seed = 97;
    plan.solver = {1e-7, 600};
    auto result = run_far_sweep(plan, 2);
    for (const auto& pt : result.points) {
        INFO("rho=", pt.rho, " gamma=", pt.gamma);
        CHECK(std::abs(pt.empirical - pt.theory) <= 4.0 * pt.stderr_);
    }
}

TEST_CASE("adaptive detector tracks its plug-in prediction at the 1e-2 scale" *
          doctest::timeout(600)) {
    TrialPlan plan;
    plan.model = CovarianceModel::toeplitz_ar(0.7, 20);
    plan.steering = uniform_steering(20);
    plan.count = 40;
    plan.rho_grid = {0.1, 0.2, 0.3, 0.5, 0.8, 1.0};
    plan.gammas = {2.0};
    plan.big_gammas = {0.5};  // P(T > 0.5) ~ a few 1e-2 in this regime
    plan.outer_trials = 40;
    plan.inner_trials = 250;
    plan.seed = 89;
    plan.solver = {1e-7, 600};
    auto result = run_far_sweep(plan, 2);
    const auto& pt = result.adaptive_unscaled[0];
    CHECK(pt.empirical > 0.01);
    CHECK(pt.empirical < 0.1);
    CHECK(pt.empirical / pt.predicted_mean > 0.4);
    CHECK(pt.empirical / pt.predicted_mean < 2.5);
}

TEST_CASE("adaptive Gamma thresholds (unscaled mode)") {
    auto plan = small_plan(53);
    plan.big_gammas = {0.1, 0.3, 0.5};
    auto result = run_far_sweep(plan, 2);
    REQUIRE(result.adaptive_unscaled.size() == 3);
    for (std::size_t g = 0; g < 3; ++g) {
        const auto& pt = result.adaptive_unscaled[g];
        CHECK(pt.empirical >= 0.0);
        CHECK(pt.empirical <= 1.0);
        CHECK(pt.predicted_mean > 0.0);
        CHECK(pt.predicted_mean <= 1.0);
        if (g > 0) CHECK(pt.empirical <= result.adaptive_unscaled[g - 1].empirical);
    }
    // the scaled adaptive series exists for every gamma
    CHECK(result.adaptive.size() == plan.gammas.size());
    CHECK(result.rho_star.size() == std::size_t(plan.outer_trials));
    for (double rs : result.rho_star)
        CHECK(std::find(plan.rho_grid.begin(), plan.rho_grid.end(), rs) !=
              plan.rho_grid.end());
}

TEST_CASE("a sweep whose every trial fails reports AllPointsFailed") {
    auto plan = small_plan(61);
    plan.solver.tolerance = 1e-15;
    plan.solver.max_iterations = 2;
    CHECK_THROWS_AS(run_far_sweep(plan, 2), AllPointsFailed);
}

TEST_CASE("plan validation") {
    auto plan = small_plan();
    plan.rho_grid = {0.3, 1.2};
    CHECK_THROWS_AS(run_far_sweep(plan, 1), RhoOutOfRange);
    plan = small_plan();
    plan.inner_trials = 0;
    CHECK_THROWS_AS(run_far_sweep(plan, 1), Error);
    plan = small_plan();
    plan.rho_grid.clear();
    CHECK_THROWS_AS(run_far_sweep(plan, 1), Error);
}

TEST_CASE("convergence probe: rho = 1 gives exactly zero gaps") {
    ProbeConfig cfg;
    cfg.sizes = {12, 24};
    cfg.rho = 1.0;
    cfg.num_seeds = 3;
    auto report = convergence_probe(cfg, 2);
    for (const auto& pt : report.points) {
        CHECK(pt.norm_gap == 0.0);
        for (double gap : pt.bilinear_gap) CHECK(gap == 0.0);
    }
}

TEST_CASE("convergence probe smoke: bilinear gaps obey Cauchy-Schwarz") {
    ProbeConfig cfg;
    cfg.sizes = {16, 32};
    cfg.rho = 0.5;
    cfg.num_seeds = 6;
    cfg.seed = 5;
    auto report = convergence_probe(cfg, 2);
    REQUIRE(report.points.size() == 2);
    for (const auto& pt : report.points) {
        CHECK(pt.norm_gap > 0.0);
        // k = +1 bilinear form against the spectral norm of the difference
        CHECK(pt.bilinear_gap[2] <= pt.norm_gap * (1.0 + 1e-12));
    }
}

TEST_CASE("estimator error sweep aggregates per rho") {
    auto plan = small_plan(71);
    plan.rho_grid = {0.3, 0.6, 1.0};
    plan.outer_trials = 8;
    auto report = estimator_error_sweep(plan, 2);
    REQUIRE(report.rows.size() == 3);
    for (const auto& row : report.rows) {
        CHECK(row.sigma2_theory > 0.0);
        CHECK(row.sigma2_hat_mean > 0.0);
        CHECK(row.sigma2_hat_std >= 0.0);
        CHECK(row.sigma2_hat_median_rel_err >= 0.0);
        CHECK(row.rho_bar_hat_mean > 0.0);
        REQUIRE(row.plugin_far_mean.size() == plan.gammas.size());
    }
    // deterministic across thread counts here as well
    auto again = estimator_error_sweep(plan, 1);
    for (std::size_t j = 0; j < report.rows.size(); ++j) {
        CHECK(report.rows[j].sigma2_hat_mean == again.rows[j].sigma2_hat_mean);
        CHECK(report.rows[j].sigma2_hat_std == again.rows[j].sigma2_hat_std);
    }
}

TEST_SUITE_END();
