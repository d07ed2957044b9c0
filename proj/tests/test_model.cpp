#include <doctest.h>

#include <Eigen/Dense>
#include <complex>

#include "tylershrink/errors.hpp"
#include "tylershrink/model.hpp"

using namespace tylershrink;

TEST_SUITE_BEGIN("model");

TEST_CASE("toeplitz 2x2 closed form") {
    auto m = CovarianceModel::toeplitz_ar(0.7, 2);
    CHECK(m.matrix()(0, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.matrix()(0, 1).real() == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(m.eigenvalues()(0) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(m.eigenvalues()(1) == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("degenerate size N=1") {
    auto m = CovarianceModel::toeplitz_ar(0.3, 1);
    CHECK(m.matrix()(0, 0).real() == doctest::Approx(1.0));
    CHECK(m.eigenvalues()(0) == doctest::Approx(1.0));
}

TEST_CASE("toeplitz rejects bad coefficient and size") {
    CHECK_THROWS_AS(CovarianceModel::toeplitz_ar(0.0, 4), Error);
    CHECK_THROWS_AS(CovarianceModel::toeplitz_ar(1.0, 4), Error);
    CHECK_THROWS_AS(CovarianceModel::toeplitz_ar(-0.2, 4), Error);
    CHECK_THROWS_AS(CovarianceModel::toeplitz_ar(0.7, 0), Error);
}

TEST_CASE("toeplitz N=20 eigenvalues match an independent eigensolve") {
    const int dim = 20;
    auto m = CovarianceModel::toeplitz_ar(0.7, dim);

    // oracle: build the matrix explicitly here and eigensolve it
    Eigen::MatrixXd explicit_c(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) explicit_c(i, j) = std::pow(0.7, std::abs(i - j));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(explicit_c);

    for (int i = 0; i < dim; ++i)
        CHECK(m.eigenvalues()(i) == doctest::Approx(eig.eigenvalues()(i)).epsilon(1e-10));

    // recomposition from the stored eigendecomposition
    Matrix recomposed = m.eigenvectors() *
                        m.eigenvalues().cast<std::complex<double>>().asDiagonal() *
                        m.eigenvectors().adjoint();
    CHECK((recomposed - m.matrix()).norm() <= 1e-10);
}

TEST_CASE("every constructor trace-normalizes") {
    for (int dim : {1, 3, 17}) {
        CHECK(CovarianceModel::identity(dim).matrix().real().trace() / dim ==
              doctest::Approx(1.0).epsilon(1e-12));
        CHECK(CovarianceModel::toeplitz_ar(0.5, dim).matrix().real().trace() / dim ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    auto scaled = CovarianceModel::from_matrix(3.0 * Matrix::Identity(5, 5));
    CHECK(scaled.matrix().real().trace() / 5 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((scaled.matrix() - Matrix::Identity(5, 5)).norm() <= 1e-12);
}

TEST_CASE("from_matrix rejects non-hermitian and non-positive input") {
    Matrix bad = Matrix::Zero(3, 3);
    bad(0, 1) = {1.0, 0.0};
    CHECK_THROWS_AS(CovarianceModel::from_matrix(bad), Error);
    CHECK_THROWS_AS(CovarianceModel::from_matrix(Matrix::Zero(3, 3)), Error);
}

TEST_CASE("sampling is deterministic under a fixed seed") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 6);
    auto a = sample_dataset(model, 9, TextureModel::inverse_gamma(2.5), 42);
    auto b = sample_dataset(model, 9, TextureModel::inverse_gamma(2.5), 42);
    CHECK(a.samples == b.samples);
    CHECK(a.z == b.z);
    CHECK(a.tau == b.tau);

    auto c = sample_dataset(model, 9, TextureModel::inverse_gamma(2.5), 43);
    CHECK(a.samples != c.samples);
}

TEST_CASE("truth reconstruction: x_i = sqrt(tau_i) z_i") {
    auto model = CovarianceModel::toeplitz_ar(0.6, 8);
    auto data = sample_dataset(model, 20, TextureModel::inverse_gamma(2.0), 7);
    REQUIRE(data.has_truth);
    for (int i = 0; i < data.count; ++i) {
        Vector rebuilt = std::sqrt(data.tau(i)) * data.z.col(i);
        CHECK((rebuilt - data.samples.col(i)).norm() <= 1e-12 * data.samples.col(i).norm());
    }
}

TEST_CASE("law of large numbers for the z gram matrix") {
    auto model = CovarianceModel::identity(4);
    auto data = sample_dataset(model, 10000, TextureModel::unit(), 11);
    Matrix gram = (data.z * data.z.adjoint()) / data.count;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram - Matrix::Identity(4, 4));
    CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("sample covariance of z converges toward C as n grows") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 6);
    double prev = 1e300;
    for (int count : {200, 20000}) {
        auto data = sample_dataset(model, count, TextureModel::unit(), 3);
        Matrix gram = (data.z * data.z.adjoint()) / count;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram - model.matrix());
        const double gap = eig.eigenvalues().cwiseAbs().maxCoeff();
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 0.1);
}

TEST_CASE("textures draw strictly positive") {
    RngStream rng(1, 2, 3);
    auto inv_gamma = TextureModel::inverse_gamma(0.8);
    for (int k = 0; k < 5000; ++k) CHECK(inv_gamma.draw(rng) > 0.0);

    auto disc = TextureModel::discrete({0.5, 2.0}, {0.25, 0.75});
    for (int k = 0; k < 200; ++k) {
        const double tau = disc.draw(rng);
        CHECK((tau == 0.5 || tau == 2.0));
    }
}

TEST_CASE("inverse-gamma with shape > 1 has unit mean") {
    RngStream rng(5);
    auto texture = TextureModel::inverse_gamma(3.0);
    double sum = 0.0;
    const int draws = 200000;
    for (int k = 0; k < draws; ++k) sum += texture.draw(rng);
    CHECK(sum / draws == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("texture validation") {
    CHECK_THROWS_AS(TextureModel::inverse_gamma(0.0), Error);
    CHECK_THROWS_AS(TextureModel::discrete({}, {}), Error);
    CHECK_THROWS_AS(TextureModel::discrete({1.0}, {1.0, 2.0}), Error);
    CHECK_THROWS_AS(TextureModel::discrete({-1.0}, {1.0}), Error);
}

TEST_CASE("uniform steering") {
    auto p4 = uniform_steering(4);
    for (int k = 0; k < 4; ++k) {
        CHECK(p4.p(k).real() == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(p4.p(k).imag() == 0.0);
    }
    CHECK(uniform_steering(1).p(0) == std::complex<double>(1.0, 0.0));
    for (int dim : {2, 7, 100})
        CHECK(uniform_steering(dim).p.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(uniform_steering(0), Error);
}

TEST_CASE("steering_from_vector normalizes") {
    Vector v(2);
    v << std::complex<double>(3.0, 0.0), std::complex<double>(0.0, 4.0);
    auto s = steering_from_vector(v);
    CHECK(s.p.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(steering_from_vector(Vector::Zero(3)), Error);
}

TEST_CASE("h0 observations are reproducible per stream key") {
    auto model = CovarianceModel::toeplitz_ar(0.7, 5);
    RngStream rng(9, 1, 1);
    Vector y = draw_h0_observation(model, TextureModel::unit(), rng);
    CHECK(y.size() == 5);
    RngStream rng2(9, 1, 1);
    Vector y2 = draw_h0_observation(model, TextureModel::unit(), rng2);
    CHECK(y == y2);
}

TEST_SUITE_END();
