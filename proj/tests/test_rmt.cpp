#include <doctest.h>

#include <cmath>
#include <vector>

#include "tylershrink/errors.hpp"
#include "tylershrink/rmt.hpp"

using namespace tylershrink;

namespace {

// Independent oracle for gamma: iteratively refined grid scan of the strictly
// decreasing map h(gamma), no bisection.
double gamma_grid_scan(const CovarianceModel& model, double rho) {
    const auto& lam = model.eigenvalues();
    auto h = [&](double g) {
        double acc = 0.0;
        for (int i = 0; i < model.dim(); ++i)
            acc += lam(i) / (g * rho + (1.0 - rho) * lam(i));
        return acc / model.dim() - 1.0;
    };
    double lo = 1e-6, hi = 1e6;
    for (int level = 0; level < 12; ++level) {
        const int cells = 64;
        const double step = (hi - lo) / cells;
        double new_lo = lo, new_hi = hi;
        for (int k = 0; k < cells; ++k) {
            const double a = lo + k * step;
            if (h(a) > 0.0 && h(a + step) <= 0.0) {
                new_lo = a;
                new_hi = a + step;
                break;
            }
        }
        lo = new_lo;
        hi = new_hi;
        if (hi - lo < 1e-10) break;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> rho_grid_50(double kappa) {
    std::vector<double> grid;
    for (int k = 0; k < 50; ++k) grid.push_back(kappa + (1.0 - kappa) * k / 49.0);
    return grid;
}

}  // namespace

TEST_SUITE_BEGIN("rmt");

TEST_CASE("gamma is 1 for the identity model across the grid") {
    // the defining-equation residual is held to 1e-12; its slope in gamma is
    // -rho near the root, so the gamma error is bounded by 1e-12 / rho
    auto model = CovarianceModel::identity(5);
    for (double rho : rho_grid_50(0.05))
        CHECK(std::abs(solve_gamma(model, rho) - 1.0) <= 1e-12 / rho + 1e-13);
}

TEST_CASE("gamma is 1 at rho = 1 for any trace-normalized model") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 30);
    CHECK(std::abs(solve_gamma(model, 1.0) - 1.0) <= 5e-12);
}

TEST_CASE("gamma matches an independent grid scan") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 20);
    const double solved = solve_gamma(model, 0.2);
    const double scanned = gamma_grid_scan(model, 0.2);
    CHECK(solved == doctest::Approx(scanned).epsilon(1e-8));
}

TEST_CASE("gamma residual stays below 1e-12 across the grid") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 40);
    const auto& lam = model.eigenvalues();
    for (double rho : rho_grid_50(0.05)) {
        const double gamma = solve_gamma(model, rho);
        double acc = 0.0;
        for (int i = 0; i < model.dim(); ++i)
            acc += lam(i) / (gamma * rho + (1.0 - rho) * lam(i));
        CHECK(std::abs(acc / model.dim() - 1.0) <= 1e-12);
    }
}

TEST_CASE("gamma rejects invalid rho") {
    auto model = CovarianceModel::identity(4);
    CHECK_THROWS_AS(solve_gamma(model, 0.0), BracketFailure);
    CHECK_THROWS_AS(solve_gamma(model, 1.5), BracketFailure);
}

TEST_CASE("rho_bar closed forms and monotonicity") {
    CHECK(rho_bar(1.0, 0.5, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    // identity covariance: 0.2 / (0.2 + 0.8/0.6) = 3/23
    CHECK(rho_bar(0.2, 0.5, 1.0) == doctest::Approx(3.0 / 23.0).epsilon(1e-15));

    auto model = CovarianceModel::toeplitz_ar(0.7, 25);
    const double c = 0.5;
    double prev = 0.0;
    for (double rho : rho_grid_50(0.05)) {
        const double rb = rho_bar(rho, c, solve_gamma(model, rho));
        CHECK(rb > prev);
        CHECK(rb <= 1.0 + 1e-15);
        prev = rb;
    }
}

TEST_CASE("rho_bar guards the denominator") {
    // c = 2, rho = 0.4: 1 - (1-rho) c = -0.2
    CHECK_THROWS_AS(rho_bar(0.4, 2.0, 1.0), RhoOutOfRange);
}

TEST_CASE("stieltjes solution at rho_bar = 1") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 12);
    CHECK(solve_stieltjes(model, 1.0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stieltjes identity-covariance quadratic oracle") {
    // for C = I the fixed point reduces to
    //   rb(1-rb) m^2 + (rb + c(1-rb) - (1-rb)) m - 1 = 0
    const double rb = 3.0 / 23.0, c = 0.5;
    const double qa = rb * (1.0 - rb);
    const double qb = rb + c * (1.0 - rb) - (1.0 - rb);
    const double qc = -1.0;
    const double oracle = (-qb + std::sqrt(qb * qb - 4 * qa * qc)) / (2 * qa);
    CHECK(oracle == doctest::Approx(4.6).epsilon(1e-12));

    auto model = CovarianceModel::identity(7);
    CHECK(solve_stieltjes(model, rb, c) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("stieltjes is stable under doubled iteration budget") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 100);
    BisectOptions base;
    BisectOptions doubled;
    doubled.max_iterations = 2 * base.max_iterations;
    const double a = solve_stieltjes(model, 0.3, 0.5, base);
    const double b = solve_stieltjes(model, 0.3, 0.5, doubled);
    CHECK(std::abs(a - b) <= 1e-10);
}

TEST_CASE("stieltjes residual stays below 1e-12 across the grid") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 40);
    const auto& lam = model.eigenvalues();
    const double c = 0.5;
    for (double rho : rho_grid_50(0.05)) {
        const double rb = rho_bar(rho, c, solve_gamma(model, rho));
        const double m = solve_stieltjes(model, rb, c);
        CHECK(m > 0.0);
        double acc = 0.0;
        for (int i = 0; i < model.dim(); ++i) {
            const double t = (1.0 - rb) * lam(i);
            acc += t / (1.0 + t * m);
        }
        CHECK(std::abs(m * (rb + c * acc / model.dim()) - 1.0) <= 1e-12);
    }
}

TEST_CASE("sigma2 identity-covariance closed form") {
    auto model = CovarianceModel::identity(9);
    auto p = uniform_steering(9);
    // rb = 3/23, m = 4.6 gives Q = I/5 and sigma2 = 0.5/0.68 = 25/34
    CHECK(theoretical_sigma2(model, p, 3.0 / 23.0, 4.6, 0.5) ==
          doctest::Approx(25.0 / 34.0).epsilon(1e-12));

    const auto ctx = build_theory_context(model, p, 0.5, 0.2);
    CHECK(ctx.gamma == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ctx.rho_bar == doctest::Approx(3.0 / 23.0).epsilon(1e-9));
    CHECK(ctx.m == doctest::Approx(4.6).epsilon(1e-9));
    CHECK(ctx.sigma2 == doctest::Approx(25.0 / 34.0).epsilon(1e-9));
    CHECK(ctx.alpha == doctest::Approx(0.8 / 0.6).epsilon(1e-12));
}

TEST_CASE("sigma2 at rho_bar = 1 reduces to p*Cp/2") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 15);
    auto p = uniform_steering(15);
    const double expected =
        0.5 * (p.p.adjoint() * model.matrix() * p.p).value().real();
    CHECK(theoretical_sigma2(model, p, 1.0, 1.0, 0.5) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sigma2 rejects a degenerate denominator") {
    auto model = CovarianceModel::identity(4);
    auto p = uniform_steering(4);
    // deliberately inconsistent m makes the bracket negative
    CHECK_THROWS_AS(theoretical_sigma2(model, p, 0.5, 100.0, 4.0), DegenerateDenominator);
}

TEST_CASE("reference curve values at rho = 0.2, N = 100, c = 1/2") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 100);
    auto p = uniform_steering(100);
    const auto ctx = build_theory_context(model, p, 0.5, 0.2);
    CHECK(rayleigh_tail(2.0, ctx.sigma2) == doctest::Approx(0.1114).epsilon(5e-3));
    CHECK(rayleigh_tail(3.0, ctx.sigma2) == doctest::Approx(0.00717).epsilon(5e-3));
}

TEST_CASE("sigma2 is continuous along the rho grid") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 50);
    auto p = uniform_steering(50);
    double prev = -1.0;
    for (double rho : rho_grid_50(0.05)) {
        const auto ctx = build_theory_context(model, p, 0.5, rho);
        CHECK(ctx.sigma2 > 0.0);
        if (prev > 0.0) CHECK(std::abs(ctx.sigma2 - prev) < 0.2);
        prev = ctx.sigma2;
    }
}

TEST_CASE("rayleigh tail closed forms") {
    CHECK(rayleigh_tail(0.0, 0.3) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rayleigh_tail(1.0, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(rayleigh_tail(2.0, 25.0 / 34.0) == doctest::Approx(std::exp(-2.72)).epsilon(1e-12));
    CHECK_THROWS_AS(rayleigh_tail(-1.0, 0.5), Error);
    CHECK_THROWS_AS(rayleigh_tail(1.0, 0.0), Error);
}

TEST_CASE("rayleigh tail equals one minus the CDF integrated numerically") {
    // Simpson quadrature of the Rayleigh density over [gamma, gamma + 12 sigma]
    const double sigma2 = 0.91, sigma = std::sqrt(sigma2), gamma = 1.7;
    auto pdf = [&](double t) { return t / sigma2 * std::exp(-t * t / (2 * sigma2)); };
    const int panels = 4000;
    const double hi = gamma + 12 * sigma, h = (hi - gamma) / panels;
    double integral = pdf(gamma) + pdf(hi);
    for (int k = 1; k < panels; ++k) integral += (k % 2 ? 4.0 : 2.0) * pdf(gamma + k * h);
    integral *= h / 3.0;
    CHECK(rayleigh_tail(gamma, sigma2) == doctest::Approx(integral).epsilon(1e-9));
}

TEST_SUITE_END();
