#include <catch2/catch_amalgamated.hpp>

#include "ecmbq/errors.hpp"
#include "ecmbq/gp.hpp"

#include <Eigen/Eigenvalues>

using namespace ecmbq;
using Catch::Approx;

namespace {

Kernel make_kernel(double s, std::initializer_list<double> ls) {
    Kernel k;
    k.output_scale = s;
    k.lengthscales.resize(static_cast<Eigen::Index>(ls.size()));
    Eigen::Index i = 0;
    for (double l : ls) k.lengthscales[i++] = l;
    return k;
}

Matrix uniform_points(Eigen::Index n, int d, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) X(i, k) = u(rng);
    return X;
}

double det3(const Matrix& A) {
    return A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) - A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
           A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
}

// Cramer's rule on a 3 x 3 system.
Vector cramer3(const Matrix& A, const Vector& b) {
    const double d = det3(A);
    Vector x(3);
    for (int c = 0; c < 3; ++c) {
        Matrix Ac = A;
        Ac.col(c) = b;
        x[c] = det3(Ac) / d;
    }
    return x;
}

}  // namespace

TEST_CASE("kernel matrix agrees with pointwise evaluation", "[gp]") {
    Rng rng(1);
    const Kernel k = make_kernel(1.7, {0.4, 1.3});
    const Matrix A = uniform_points(7, 2, rng), B = uniform_points(5, 2, rng);
    const Matrix K = k.matrix(A, B);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 5; ++j) CHECK(K(i, j) == Approx(k(A.row(i).transpose(), B.row(j).transpose())).epsilon(1e-13));
}

TEST_CASE("mean interpolates observed targets", "[gp]") {
    Rng rng(2);
    const Matrix X = uniform_points(6, 2, rng);
    const Vector y = standard_normal(6, rng);
    const GpState gp(make_kernel(1.0, {0.5, 0.5}), X, y, 1e-12);
    const Vector m = gp.predict_mean(X);
    for (int i = 0; i < 6; ++i) CHECK(m[i] == Approx(y[i]).epsilon(1e-6).margin(1e-9));
    const Vector v = gp.predict_var(X);
    for (int i = 0; i < 6; ++i) CHECK(v[i] <= gp.jitter() * (1.0 + 1e-6) + 1e-15);
}

TEST_CASE("mean reverts to zero far from the data", "[gp]") {
    Rng rng(3);
    const Matrix X = uniform_points(10, 3, rng);
    const GpState gp(make_kernel(2.0, {0.3, 0.3, 0.3}), X, standard_normal(10, rng));
    const Matrix far = Matrix::Constant(1, 3, 20.0 * 0.3 + 1.0);
    CHECK(std::abs(gp.predict_mean(far)[0]) < 1e-12);
    CHECK(gp.predict_var(far)[0] == Approx(2.0));
}

TEST_CASE("three point system against Cramer's rule", "[gp]") {
    Matrix X(3, 1);
    X << -0.5, 0.1, 0.9;
    Vector y(3);
    y << 1.0, -0.4, 0.7;
    const Kernel k = make_kernel(1.3, {0.6});
    const GpState gp(k, X, y, 1e-12);
    Matrix K = k.matrix(X, X);
    K.diagonal().array() += gp.jitter();
    const Vector alpha = cramer3(K, y);
    Matrix Q(2, 1);
    Q << 0.3, -1.2;
    const Vector expect = k.matrix(Q, X) * alpha;
    const Vector got = gp.predict_mean(Q);
    CHECK(got[0] == Approx(expect[0]).epsilon(1e-9));
    CHECK(got[1] == Approx(expect[1]).epsilon(1e-9));
    // variance from the same solves
    for (int q = 0; q < 2; ++q) {
        const Vector kq = k.matrix(X, Q.row(q)).col(0);
        const double var = k.output_scale - kq.dot(cramer3(K, kq));
        CHECK(gp.predict_var(Q.row(q))[0] == Approx(var).epsilon(1e-8).margin(1e-12));
    }
}

TEST_CASE("empty state is the prior", "[gp]") {
    const Kernel k = make_kernel(0.7, {1.0, 2.0});
    const GpState gp(k, Matrix(0, 2), Vector(0));
    Rng rng(4);
    const Matrix Q = uniform_points(4, 2, rng);
    CHECK((gp.predict_cov(Q) - k.matrix(Q, Q)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(gp.predict_mean(Q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("posterior covariance is positive semidefinite", "[gp][property]") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix X = uniform_points(5, 2, rng);
        const GpState gp(make_kernel(1.0, {0.4, 0.8}), X, standard_normal(5, rng));
        const Matrix Q = uniform_points(8, 2, rng);
        const Matrix C = gp.predict_cov(Q);
        Eigen::SelfAdjointEigenSolver<Matrix> es(C);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
        CHECK((C.diagonal().array() >= 0.0).all());
    }
}

TEST_CASE("adding an observation never increases variance", "[gp][property]") {
    Rng rng(6);
    const Kernel k = make_kernel(1.0, {0.5, 0.5});
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix X = uniform_points(8, 2, rng);
        const Vector y = standard_normal(8, rng);
        const GpState small(k, X.topRows(7), y.head(7));
        const GpState big(k, X, y);
        const Matrix Q = uniform_points(20, 2, rng);
        CHECK(((big.predict_var(Q) - small.predict_var(Q)).array() <= 1e-8).all());
    }
}

TEST_CASE("jitter ladder gives up beyond its top rung", "[gp]") {
    Matrix X = Matrix::Zero(3, 1);
    const GpState ok(make_kernel(1.0, {1.0}), X, Vector::Zero(3));
    CHECK(ok.jitter() > 0.0);
    CHECK(ok.jitter() <= 1e-4);
    Kernel bad = make_kernel(1.0, {1.0});
    bad.lengthscales[0] = -1.0;
    CHECK_THROWS_AS(GpState(bad, X, Vector::Zero(3)), ConfigError);
}

TEST_CASE("hyperparameter fit on all-zero targets", "[gp]") {
    Rng rng(7);
    const Matrix X = uniform_points(30, 2, rng);
    HyperFitOptions opts;
    opts.seed = 1;
    const Kernel k = fit_hyperparams(X, Vector::Zero(30), opts);
    CHECK(k.output_scale < 1e-3);
}

TEST_CASE("hyperparameter fit recovers a known lengthscale", "[gp]") {
    Rng rng(8);
    const Eigen::Index n = 200;
    const Matrix X = uniform_points(n, 1, rng, -3.0, 3.0);
    const Kernel truth = make_kernel(1.0, {0.5});
    Matrix K = truth.matrix(X, X);
    K.diagonal().array() += 1e-8;
    const Matrix L = Eigen::LLT<Matrix>(K).matrixL();
    const Vector y = L * standard_normal(n, rng);
    HyperFitOptions opts;
    opts.seed = 3;
    const Kernel k = fit_hyperparams(X, y, opts);
    CHECK(k.lengthscales[0] > 0.25);
    CHECK(k.lengthscales[0] < 1.0);
    const Kernel again = fit_hyperparams(X, y, opts);
    CHECK(again.output_scale == k.output_scale);
    CHECK(again.lengthscales == k.lengthscales);
}

TEST_CASE("marginal likelihood gradient matches finite differences", "[gp]") {
    Rng rng(9);
    const Matrix X = uniform_points(15, 2, rng);
    const Vector y = standard_normal(15, rng);
    const Kernel k = make_kernel(1.5, {0.7, 0.4});
    Vector grad;
    log_marginal_likelihood(k, X, y, 1e-8, &grad);
    const double h = 1e-6;
    for (int p = 0; p < 3; ++p) {
        Kernel kp = k, km = k;
        if (p == 0) {
            kp.output_scale *= std::exp(h);
            km.output_scale *= std::exp(-h);
        } else {
            kp.lengthscales[p - 1] *= std::exp(h);
            km.lengthscales[p - 1] *= std::exp(-h);
        }
        const double fd = (log_marginal_likelihood(kp, X, y, 1e-8) - log_marginal_likelihood(km, X, y, 1e-8)) / (2 * h);
        CHECK(grad[p] == Approx(fd).epsilon(1e-4).margin(1e-6));
    }
}
