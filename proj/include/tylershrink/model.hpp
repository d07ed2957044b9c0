#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "tylershrink/rng.hpp"

namespace tylershrink {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Population scatter matrix C with (1/N) tr C = 1 and its eigendecomposition.
// The eigenvalues double as the discrete spectral measure used by the
// random-matrix solvers.
class CovarianceModel {
public:
    CovarianceModel() = default;  // empty until assigned from a builder

    static CovarianceModel identity(int dim);

    // [C]_{ij} = a^{|i-j|}, a in (0, 1). Unit diagonal, so already trace-normalized.
    static CovarianceModel toeplitz_ar(double a, int dim);

    // Arbitrary Hermitian positive-definite input, rescaled to (1/N) tr C = 1.
    static CovarianceModel from_matrix(const Matrix& c);

    int dim() const { return dim_; }
    const Matrix& matrix() const { return matrix_; }
    const RealVector& eigenvalues() const { return eigenvalues_; }  // ascending
    const Matrix& eigenvectors() const { return eigenvectors_; }
    const Matrix& sqrt() const { return sqrt_; }  // Hermitian square root

private:
    void finalize();  // eigendecomposition + invariant checks

    int dim_ = 0;
    Matrix matrix_;
    RealVector eigenvalues_;
    Matrix eigenvectors_;
    Matrix sqrt_;
};

// Law of the positive texture scalars tau_i.
struct TextureModel {
    enum class Law { Unit, InverseGamma, Discrete };

    Law law = Law::Unit;
    double shape = 3.0;                 // inverse-gamma only
    std::vector<double> values;         // discrete only
    std::vector<double> weights;        // discrete only

    static TextureModel unit() { return {}; }
    static TextureModel inverse_gamma(double shape);
    static TextureModel discrete(std::vector<double> values, std::vector<double> weights);

    // Strictly positive draw. Inverse-gamma is scaled to unit mean when shape > 1.
    double draw(RngStream& rng) const;

    std::string describe() const;
};

// Known steering direction, unit Euclidean norm.
struct SteeringVector {
    Vector p;
    int dim() const { return static_cast<int>(p.size()); }
};

// p = N^{-1/2} [1, ..., 1]^T
SteeringVector uniform_steering(int dim);
SteeringVector steering_from_vector(const Vector& v);  // normalizes

// n elliptical observations x_i = sqrt(tau_i) z_i, z_i = C^{1/2} w_i, with the
// generating truth kept for simulation-only diagnostics.
struct Dataset {
    int dim = 0;
    int count = 0;
    Matrix samples;        // N x n, columns are x_i
    bool has_truth = false;
    Matrix z;              // N x n, columns are z_i (simulation only)
    RealVector tau;        // n (simulation only)
};

// Deterministic under (seed, stream): per-sample draw order is w first, tau second.
Dataset sample_dataset(const CovarianceModel& model, int count, const TextureModel& texture,
                       std::uint64_t seed, std::uint64_t stream = 0);

// One fresh H0 observation (same law as the dataset columns), for detector trials.
Vector draw_h0_observation(const CovarianceModel& model, const TextureModel& texture,
                           RngStream& rng);

}  // namespace tylershrink
