#include "tylershrink/detector.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "tylershrink/errors.hpp"

namespace tylershrink {

GlrtStatistic glrt_statistic(const Vector& y, const SteeringVector& p,
                             const ScatterEstimate& est) {
    Eigen::LLT<Matrix> llt(est.matrix);
    if (llt.info() != Eigen::Success)
        throw SingularEstimate("scatter estimate is not positive definite");

    // C = L L*, so y* C^{-1} p = (L^{-1} y)* (L^{-1} p); one factorization suffices.
    Vector wy = y;
    llt.matrixL().solveInPlace(wy);
    Vector wp = p.p;
    llt.matrixL().solveInPlace(wp);

    GlrtStatistic stat;
    stat.rho = est.rho;
    stat.y_cinv_p = wy.dot(wp);
    stat.y_cinv_y = wy.squaredNorm();
    stat.p_cinv_p = wp.squaredNorm();
    stat.value = std::abs(stat.y_cinv_p) / std::sqrt(stat.y_cinv_y * stat.p_cinv_p);
    if (stat.value > 1.0) stat.value = 1.0;  // Cauchy-Schwarz up to rounding
    return stat;
}

bool decide(const GlrtStatistic& stat, double threshold) {
    if (!(threshold >= 0.0)) throw Error("threshold must be nonnegative");
    return stat.value > threshold;
}

double empirical_rho_bar(const ScatterEstimate& est) {
    const double mean_trace = est.matrix.real().trace() / est.matrix.rows();
    return est.rho / mean_trace;
}

double empirical_sigma2(const ScatterEstimate& est, const SteeringVector& p,
                        double rho_bar, double c) {
    const int dim = static_cast<int>(est.matrix.rows());
    Eigen::LLT<Matrix> llt(est.matrix);
    if (llt.info() != Eigen::Success)
        throw SingularEstimate("scatter estimate is not positive definite");

    Vector wp = p.p;
    llt.matrixL().solveInPlace(wp);            // L^{-1} p
    const double p_cinv_p = wp.squaredNorm();  // p* C^{-1} p
    Vector cinv_p = wp;
    llt.matrixU().solveInPlace(cinv_p);            // C^{-1} p
    const double p_cinv2_p = cinv_p.squaredNorm();  // p* C^{-2} p

    const double tr_c = est.matrix.real().trace() / dim;
    Matrix linv = Matrix::Identity(dim, dim);
    llt.matrixL().solveInPlace(linv);
    const double tr_cinv = linv.squaredNorm() / dim;  // (1/N) tr C^{-1} = ||L^{-1}||_F^2 / N

    const double num = 1.0 - rho_bar * (p_cinv2_p / p_cinv_p) * tr_c;
    const double den = (1.0 - c + c * rho_bar * tr_cinv * tr_c) *
                       (1.0 - rho_bar * tr_cinv * tr_c);
    if (!(den > 0.0))
        throw DegenerateDenominator("plug-in variance denominator <= 0");
    return 0.5 * num / den;
}

namespace {

double sigma2_at_one_from_gram(const Matrix& gram, const SteeringVector& p) {
    const int dim = static_cast<int>(gram.rows());
    const double num = (p.p.adjoint() * gram * p.p).value().real();
    const double tr = gram.real().trace() / dim;
    return 0.5 * num / tr;
}

}  // namespace

double empirical_sigma2_at_one(const Dataset& data, const SteeringVector& p) {
    const int dim = data.dim;
    Matrix proxies(dim, data.count);
    for (int i = 0; i < data.count; ++i) {
        const double norm = data.samples.col(i).norm();
        if (norm == 0.0) throw ZeroSample(i);
        proxies.col(i) = std::sqrt(double(dim)) / norm * data.samples.col(i);
    }
    Matrix gram = Matrix::Zero(dim, dim);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(proxies, 1.0 / data.count);
    gram = gram.selfadjointView<Eigen::Lower>();
    return sigma2_at_one_from_gram(gram, p);
}

double empirical_sigma2_at_one_truth(const Dataset& data, const SteeringVector& p) {
    if (!data.has_truth) throw MissingTruth();
    Matrix gram = Matrix::Zero(data.dim, data.dim);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(data.z, 1.0 / data.count);
    gram = gram.selfadjointView<Eigen::Lower>();
    return sigma2_at_one_from_gram(gram, p);
}

RhoSweepResult select_rho_star(const Dataset& data, const SteeringVector& p,
                               const std::vector<double>& grid, const SolverConfig& cfg,
                               double kappa) {
    if (grid.empty()) throw Error("rho grid must be nonempty");
    const double c = double(data.dim) / data.count;

    RhoSweepResult result;
    result.grid = grid;
    result.rho_bar_hat.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    result.sigma2_hat.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    result.ok.assign(grid.size(), false);

    std::optional<Matrix> warm;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        try {
            const double rho = grid[j];
            if (rho == 1.0) {
                result.rho_bar_hat[j] = 1.0;
                result.sigma2_hat[j] = empirical_sigma2_at_one(data, p);
            } else {
                const auto param = ShrinkageParam::make(rho, data.dim, data.count, kappa);
                ScatterEstimate est = robust_shrinkage_fit(data, param, cfg, warm);
                warm = est.matrix;
                const double rb = empirical_rho_bar(est);
                result.rho_bar_hat[j] = rb;
                result.sigma2_hat[j] = empirical_sigma2(est, p, rb, c);
            }
            result.ok[j] = true;
        } catch (const Error&) {
            // recorded as a failed point; the sweep continues
        }
    }

    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (!result.ok[j]) continue;
        if (result.selected_index < 0 ||
            result.sigma2_hat[j] < result.sigma2_hat[result.selected_index])
            result.selected_index = static_cast<int>(j);  // ties keep the smaller rho
    }
    if (result.selected_index < 0) throw AllPointsFailed();
    result.rho_star = grid[result.selected_index];
    return result;
}

}  // namespace tylershrink
