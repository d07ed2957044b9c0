#include "tylershrink/estimators.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "tylershrink/errors.hpp"

namespace tylershrink {

namespace {

// One application of the fixed-point map
//   F(C) = (1 - rho) (1/n) sum_i x_i x_i^* / ((1/N) x_i^* C^{-1} x_i) + rho I.
// The n quadratic forms come from a single Cholesky factorization of C; all
// buffers are caller-owned so the iteration loop does not allocate.
void apply_map(const Matrix& samples, double rho, const Matrix& current,
               Eigen::LLT<Matrix>& llt, Matrix& whitened, Matrix& scaled, Matrix& next) {
    const int dim = static_cast<int>(samples.rows());
    const int count = static_cast<int>(samples.cols());

    llt.compute(current);
    if (llt.info() != Eigen::Success)
        throw NonConvergence(0, std::numeric_limits<double>::quiet_NaN());

    whitened = samples;
    llt.matrixL().solveInPlace(whitened);

    for (int i = 0; i < count; ++i) {
        const double quad = whitened.col(i).squaredNorm() / dim;  // (1/N) x_i^* C^{-1} x_i
        scaled.col(i) = samples.col(i) * std::sqrt((1.0 - rho) / (count * quad));
    }

    next.setZero();
    next.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    next.triangularView<Eigen::StrictlyUpper>() = next.adjoint();
    next.diagonal().array() += rho;
}

}  // namespace

ShrinkageParam ShrinkageParam::make(double rho, int dim, int count, double kappa) {
    if (!(kappa > 0.0)) throw RhoOutOfRange("kappa must be positive");
    ShrinkageParam p;
    p.rho = rho;
    p.kappa = kappa;
    p.lower_bound = std::max(0.0, 1.0 - double(count) / dim);
    if (!(rho >= p.lower_bound + kappa && rho <= 1.0))
        throw RhoOutOfRange("rho=" + std::to_string(rho) + " outside R_kappa=[" +
                            std::to_string(p.lower_bound + kappa) + ", 1]");
    return p;
}

ScatterEstimate robust_shrinkage_fit(const Dataset& data, const ShrinkageParam& rho,
                                     const SolverConfig& cfg,
                                     const std::optional<Matrix>& initial) {
    const int dim = data.dim;
    const int count = data.count;
    // re-derive the bound from the data itself; the param may have been built
    // against other dimensions
    const double lower = std::max(0.0, 1.0 - double(count) / dim);
    if (!(rho.rho >= lower + rho.kappa && rho.rho <= 1.0))
        throw RhoOutOfRange("rho=" + std::to_string(rho.rho) + " outside R_kappa");
    if (!(cfg.tolerance > 0.0) || cfg.max_iterations < 1)
        throw Error("invalid solver configuration");
    for (int i = 0; i < count; ++i)
        if (data.samples.col(i).squaredNorm() == 0.0) throw ZeroSample(i);

    Matrix current = initial.value_or(Matrix::Identity(dim, dim));
    Eigen::LLT<Matrix> llt(dim);
    Matrix whitened(dim, count), scaled(dim, count), next(dim, dim);

    ScatterEstimate est;
    est.rho = rho.rho;

    double change = std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        apply_map(data.samples, rho.rho, current, llt, whitened, scaled, next);
        change = (next - current).norm() / current.norm();
        current.swap(next);
        est.iterations_used = iter;
        if (!std::isfinite(change)) throw NonConvergence(iter, change);
        if (change < cfg.tolerance) {
            // residual of the defining equation at the matrix actually returned
            apply_map(data.samples, rho.rho, current, llt, whitened, scaled, next);
            est.final_residual = (next - current).norm() / current.norm();
            est.matrix = std::move(current);
            return est;
        }
    }
    throw NonConvergence(cfg.max_iterations, change);
}

Matrix sample_covariance(const Dataset& data) {
    const int dim = data.dim;
    Matrix cov = Matrix::Zero(dim, dim);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(data.samples, 1.0 / data.count);
    cov = cov.selfadjointView<Eigen::Lower>();
    return cov;
}

namespace {

Matrix gram_of_truth(const Dataset& truth) {
    if (!truth.has_truth) throw MissingTruth();
    const int dim = truth.dim;
    Matrix gram = Matrix::Zero(dim, dim);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(truth.z, 1.0 / truth.count);
    gram = gram.selfadjointView<Eigen::Lower>();
    return gram;
}

}  // namespace

Matrix deterministic_equivalent(const Dataset& truth, double gamma, double rho, double c) {
    if (!(gamma > 0.0)) throw Error("gamma must be positive");
    const double denom = 1.0 - (1.0 - rho) * c;
    if (!(denom > 0.0)) throw RhoOutOfRange("1 - (1-rho) c must be positive");
    Matrix s = ((1.0 - rho) / (gamma * denom)) * gram_of_truth(truth);
    s.diagonal().array() += rho;
    return s;
}

Matrix deterministic_equivalent_underline(const Dataset& truth, double rho_bar) {
    Matrix s = (1.0 - rho_bar) * gram_of_truth(truth);
    s.diagonal().array() += rho_bar;
    return s;
}

}  // namespace tylershrink
