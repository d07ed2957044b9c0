#include "tylershrink/rmt.hpp"

#include <cmath>

#include "tylershrink/errors.hpp"

namespace tylershrink {

namespace {

// Bisection for a strictly monotone residual; stops on |residual| <= tol.
template <typename F>
double bisect(F&& residual, double lo, double hi, bool increasing, const BisectOptions& opt) {
    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < opt.max_iterations; ++i) {
        mid = 0.5 * (lo + hi);
        const double r = residual(mid);
        if (std::abs(r) <= opt.tolerance) return mid;
        if ((r > 0.0) == increasing)
            hi = mid;
        else
            lo = mid;
    }
    return mid;
}

}  // namespace

double solve_gamma(const CovarianceModel& model, double rho, const BisectOptions& opt) {
    if (!(rho > 0.0 && rho <= 1.0))
        throw BracketFailure("solve_gamma requires rho in (0, 1]");
    const RealVector& lam = model.eigenvalues();
    const int dim = model.dim();

    // h(gamma) = (1/N) sum lam / (gamma rho + (1-rho) lam) - 1, strictly decreasing.
    auto h = [&](double gamma) {
        double acc = 0.0;
        for (int i = 0; i < dim; ++i) acc += lam(i) / (gamma * rho + (1.0 - rho) * lam(i));
        return acc / dim - 1.0;
    };

    double lo = lam(0) * 1e-280;
    if (!(h(lo) > 0.0)) throw BracketFailure("gamma lower bracket has wrong sign");
    double hi = 1.0;
    int grow = 0;
    while (h(hi) > 0.0) {
        hi *= 2.0;
        if (++grow > 200) throw BracketFailure("gamma upper bracket not found");
    }
    return bisect(h, lo, hi, /*increasing=*/false, opt);
}

double rho_bar(double rho, double c, double gamma) {
    if (!(gamma > 0.0)) throw Error("gamma must be positive");
    const double denom = 1.0 - (1.0 - rho) * c;
    if (!(denom > 0.0)) throw RhoOutOfRange("1 - (1-rho) c must be positive");
    return rho / (rho + (1.0 - rho) / (gamma * denom));
}

double solve_stieltjes(const CovarianceModel& model, double rho_bar, double c,
                       const BisectOptions& opt) {
    if (!(rho_bar > 0.0 && rho_bar <= 1.0))
        throw BracketFailure("solve_stieltjes requires rho_bar in (0, 1]");
    const RealVector& lam = model.eigenvalues();
    const int dim = model.dim();

    // g(m) = m (rho_bar + c (1/N) sum (1-rb) lam / (1 + (1-rb) lam m)) - 1,
    // strictly increasing on m > 0 with g(0) = -1.
    auto g = [&](double m) {
        double acc = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double t = (1.0 - rho_bar) * lam(i);
            acc += t / (1.0 + t * m);
        }
        return m * (rho_bar + c * acc / dim) - 1.0;
    };

    double lo = 0.0;
    double hi = 1.0;
    int grow = 0;
    while (g(hi) < 0.0) {
        hi *= 2.0;
        if (++grow > 200) throw BracketFailure("stieltjes upper bracket not found");
    }
    return bisect(g, lo, hi, /*increasing=*/true, opt);
}

double theoretical_sigma2(const CovarianceModel& model, const SteeringVector& p,
                          double rho_bar, double m, double c) {
    const int dim = model.dim();
    if (p.dim() != dim) throw Error("steering dimension mismatch");
    const RealVector& lam = model.eigenvalues();

    // rotate p once into the eigenbasis of C; Q is diagonal there
    const Vector p_rot = model.eigenvectors().adjoint() * p.p;

    double p_c_q2_p = 0.0, p_q_p = 0.0, tr_c_q = 0.0, tr_c2_q2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double q = 1.0 / (1.0 + (1.0 - rho_bar) * m * lam(i));
        const double w = std::norm(p_rot(i));
        p_c_q2_p += w * lam(i) * q * q;
        p_q_p += w * q;
        tr_c_q += lam(i) * q;
        tr_c2_q2 += lam(i) * lam(i) * q * q;
    }
    tr_c_q /= dim;
    tr_c2_q2 /= dim;

    const double bracket =
        1.0 - c * (1.0 - rho_bar) * (1.0 - rho_bar) * m * m * tr_c2_q2;
    if (!(bracket > 0.0))
        throw DegenerateDenominator("variance bracket 1 - c (1-rb)^2 m^2 tr(C^2 Q^2)/N <= 0");

    return 0.5 * p_c_q2_p / (p_q_p * tr_c_q * bracket);
}

double rayleigh_tail(double gamma_threshold, double sigma2) {
    if (!(gamma_threshold >= 0.0)) throw Error("threshold must be nonnegative");
    if (!(sigma2 > 0.0)) throw Error("sigma2 must be positive");
    return std::exp(-gamma_threshold * gamma_threshold / (2.0 * sigma2));
}

TheoryContext build_theory_context(const CovarianceModel& model, const SteeringVector& p,
                                   double c, double rho) {
    TheoryContext ctx;
    ctx.c = c;
    ctx.rho = rho;
    ctx.gamma = solve_gamma(model, rho);
    const double denom = 1.0 - (1.0 - rho) * c;
    if (!(denom > 0.0)) throw RhoOutOfRange("1 - (1-rho) c must be positive");
    ctx.alpha = (1.0 - rho) / denom;
    ctx.rho_bar = rho_bar(rho, c, ctx.gamma);
    ctx.m = solve_stieltjes(model, ctx.rho_bar, c);
    ctx.sigma2 = theoretical_sigma2(model, p, ctx.rho_bar, ctx.m, c);
    return ctx;
}

}  // namespace tylershrink
