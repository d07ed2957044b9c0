#include "tylershrink/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "tylershrink/errors.hpp"

namespace tylershrink {

void CovarianceModel::finalize() {
    const int n = dim_;
    if (n <= 0) throw Error("covariance dimension must be positive");

    // trace normalization (1/N) tr C = 1
    const double mean_diag = matrix_.real().trace() / n;
    if (!(mean_diag > 0.0)) throw Error("covariance has non-positive trace");
    matrix_ /= mean_diag;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(matrix_);
    if (eig.info() != Eigen::Success) throw Error("covariance eigendecomposition failed");
    eigenvalues_ = eig.eigenvalues();
    eigenvectors_ = eig.eigenvectors();
    if (eigenvalues_(0) <= 0.0) throw Error("covariance is not positive definite");

    sqrt_ = eigenvectors_ * eigenvalues_.cwiseSqrt().asDiagonal() *
            eigenvectors_.adjoint();
}

CovarianceModel CovarianceModel::identity(int dim) {
    CovarianceModel m;
    m.dim_ = dim;
    m.matrix_ = Matrix::Identity(dim, dim);
    m.finalize();
    return m;
}

CovarianceModel CovarianceModel::toeplitz_ar(double a, int dim) {
    if (!(a > 0.0 && a < 1.0)) throw Error("AR coefficient must lie in (0, 1)");
    CovarianceModel m;
    m.dim_ = dim;
    m.matrix_.resize(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            m.matrix_(i, j) = std::pow(a, std::abs(i - j));
    m.finalize();
    return m;
}

CovarianceModel CovarianceModel::from_matrix(const Matrix& c) {
    if (c.rows() != c.cols()) throw Error("covariance must be square");
    if ((c - c.adjoint()).norm() > 1e-10 * std::max(1.0, c.norm()))
        throw Error("covariance must be Hermitian");
    CovarianceModel m;
    m.dim_ = static_cast<int>(c.rows());
    m.matrix_ = (c + c.adjoint()) / 2.0;
    m.finalize();
    return m;
}

TextureModel TextureModel::inverse_gamma(double shape) {
    if (!(shape > 0.0)) throw Error("inverse-gamma shape must be positive");
    TextureModel t;
    t.law = Law::InverseGamma;
    t.shape = shape;
    return t;
}

TextureModel TextureModel::discrete(std::vector<double> values, std::vector<double> weights) {
    if (values.empty() || values.size() != weights.size())
        throw Error("discrete texture needs matching, nonempty values/weights");
    for (double v : values)
        if (!(v > 0.0)) throw Error("discrete texture values must be positive");
    for (double w : weights)
        if (!(w >= 0.0)) throw Error("discrete texture weights must be nonnegative");
    TextureModel t;
    t.law = Law::Discrete;
    t.values = std::move(values);
    t.weights = std::move(weights);
    return t;
}

double TextureModel::draw(RngStream& rng) const {
    switch (law) {
        case Law::Unit:
            return 1.0;
        case Law::InverseGamma: {
            // scale = shape - 1 gives unit mean when the mean exists
            const double scale = shape > 1.0 ? shape - 1.0 : 1.0;
            return scale / rng.gamma(shape);
        }
        case Law::Discrete: {
            std::vector<double> cum(weights.size());
            std::partial_sum(weights.begin(), weights.end(), cum.begin());
            return values[rng.categorical(cum)];
        }
    }
    throw Error("unknown texture law");
}

std::string TextureModel::describe() const {
    std::ostringstream out;
    switch (law) {
        case Law::Unit:
            out << "unit";
            break;
        case Law::InverseGamma:
            out << "inverse_gamma(shape=" << shape << ")";
            break;
        case Law::Discrete:
            out << "discrete(" << values.size() << " atoms)";
            break;
    }
    return out.str();
}

SteeringVector uniform_steering(int dim) {
    if (dim < 1) throw Error("steering dimension must be positive");
    SteeringVector s;
    s.p = Vector::Constant(dim, std::complex<double>(1.0 / std::sqrt(double(dim)), 0.0));
    return s;
}

SteeringVector steering_from_vector(const Vector& v) {
    const double norm = v.norm();
    if (!(norm > 0.0)) throw Error("steering vector must be nonzero");
    SteeringVector s;
    s.p = v / norm;
    return s;
}

Dataset sample_dataset(const CovarianceModel& model, int count, const TextureModel& texture,
                       std::uint64_t seed, std::uint64_t stream) {
    if (count < 1) throw Error("sample count must be >= 1");
    const int dim = model.dim();

    Dataset data;
    data.dim = dim;
    data.count = count;
    data.samples.resize(dim, count);
    data.z.resize(dim, count);
    data.tau.resize(count);
    data.has_truth = true;

    RngStream rng(seed, stream, 0);
    Vector w(dim);
    for (int i = 0; i < count; ++i) {
        for (int k = 0; k < dim; ++k) w(k) = rng.complex_normal();
        data.z.col(i).noalias() = model.sqrt() * w;
        data.tau(i) = texture.draw(rng);
        data.samples.col(i) = std::sqrt(data.tau(i)) * data.z.col(i);
    }
    return data;
}

Vector draw_h0_observation(const CovarianceModel& model, const TextureModel& texture,
                           RngStream& rng) {
    const int dim = model.dim();
    Vector w(dim);
    for (int k = 0; k < dim; ++k) w(k) = rng.complex_normal();
    const double tau = texture.draw(rng);
    return std::sqrt(tau) * (model.sqrt() * w);
}

}  // namespace tylershrink
