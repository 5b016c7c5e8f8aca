#include <catch2/catch_amalgamated.hpp>

#include "ecmbq/errors.hpp"
#include "ecmbq/recombination.hpp"

using namespace ecmbq;
using Catch::Approx;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    Matrix A(r, c);
    for (Eigen::Index i = 0; i < r; ++i) A.row(i) = standard_normal(c, rng).transpose();
    return A;
}

Vector random_weights(Eigen::Index n, Rng& rng) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = u(rng);
    return w;
}

// A smooth 2-d surrogate peaked near (0.5, -0.3).
WarpedSurrogate toy_surrogate(Rng& rng) {
    Matrix X = 1.5 * random_matrix(40, 2, rng);
    Vector y(40);
    for (int i = 0; i < 40; ++i) y[i] = -2.0 * ((X(i, 0) - 0.5) * (X(i, 0) - 0.5) + (X(i, 1) + 0.3) * (X(i, 1) + 0.3));
    const WarpConstants c = warp_constants(y);
    Kernel k;
    k.output_scale = 1.0;
    k.lengthscales = Vector::Constant(2, 0.7);
    return WarpedSurrogate(GpState(k, X, warp_forward(y, c)), c);
}

}  // namespace

TEST_CASE("no features leaves a single node carrying the mass", "[recombination]") {
    Rng rng(1);
    const Matrix X = random_matrix(30, 3, rng);
    const Vector w = random_weights(30, rng);
    const QuadratureNodes q = recombine(X, Matrix(30, 0), w);
    REQUIRE(q.weights.size() == 1);
    CHECK(q.weights[0] == Approx(w.sum()).epsilon(1e-12));
}

TEST_CASE("small candidate sets come back unchanged", "[recombination]") {
    Rng rng(2);
    const Matrix X = random_matrix(5, 2, rng);
    const Matrix F = random_matrix(5, 6, rng);
    const Vector w = random_weights(5, rng);
    const QuadratureNodes q = recombine(X, F, w);
    REQUIRE(q.weights.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(q.indices[static_cast<std::size_t>(i)] == i);
        CHECK(q.weights[i] == Approx(w[i]).epsilon(1e-10));
    }
}

TEST_CASE("feature means, positivity and mass are preserved", "[recombination][property]") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 500;
        const Eigen::Index M = 10;
        const Matrix X = random_matrix(n, 3, rng);
        const Matrix F = random_matrix(n, M, rng);
        const Vector w = random_weights(n, rng);
        const QuadratureNodes q = recombine(X, F, w);
        CHECK(q.weights.size() <= M + 1);
        CHECK((q.weights.array() > 0.0).all());
        CHECK(std::abs(q.weights.sum() - w.sum()) <= 1e-10 * w.sum());
        const Vector full = F.transpose() * w;
        Vector reduced = Vector::Zero(M);
        for (Eigen::Index k = 0; k < q.weights.size(); ++k) {
            reduced += q.weights[k] * F.row(q.indices[static_cast<std::size_t>(k)]).transpose();
            CHECK(q.points.row(k) == X.row(q.indices[static_cast<std::size_t>(k)]));
        }
        CHECK((reduced - full).norm() <= 1e-8 * full.norm());
    }
}

TEST_CASE("dependent features are projected out", "[recombination]") {
    Rng rng(4);
    const Matrix X = random_matrix(200, 2, rng);
    Matrix F(200, 4);
    F.leftCols(2) = random_matrix(200, 2, rng);
    F.col(2) = F.col(0) + F.col(1);
    F.col(3) = 2.0 * F.col(0);
    const Vector w = random_weights(200, rng);
    const QuadratureNodes q = recombine(X, F, w);
    CHECK(q.weights.size() <= 3);
    const Vector full = F.transpose() * w;
    Vector reduced = Vector::Zero(4);
    for (Eigen::Index k = 0; k < q.weights.size(); ++k)
        reduced += q.weights[k] * F.row(q.indices[static_cast<std::size_t>(k)]).transpose();
    CHECK((reduced - full).norm() <= 1e-8 * full.norm());
}

TEST_CASE("kernel mean embeddings survive recombination", "[recombination]") {
    Rng rng(5);
    Kernel k;
    k.output_scale = 1.0;
    k.lengthscales = Vector::Constant(2, 0.8);
    const Matrix X = random_matrix(400, 2, rng);
    const Vector w = random_weights(400, rng);
    const Matrix L = X.topRows(15);
    const CrossCov cov = [&](const Matrix& a, const Matrix& b) { return k.matrix(a, b); };
    const Matrix F = nystrom_features(cov, X, L);
    const QuadratureNodes q = recombine(X, F, w);
    const Vector full = k.matrix(L, X) * w;
    const Vector reduced = k.matrix(L, q.points) * q.weights;
    CHECK((reduced - full).cwiseAbs().maxCoeff() <= 1e-6 * full.cwiseAbs().maxCoeff());
}

TEST_CASE("midpoint proposal on two points and on duplicates", "[recombination]") {
    Rng rng(6);
    const WarpedSurrogate s = toy_surrogate(rng);
    const GaussianPrior prior = GaussianPrior::isotropic(2);
    Matrix obs(2, 2);
    obs << 0.2, -0.1, 0.8, -0.5;
    Vector ll(2);
    ll << -0.5, -0.7;
    const ProposalMixture q = build_proposal(s, prior, obs, ll);
    REQUIRE(q.n_components() == 1);
    CHECK(q.means(0, 0) == Approx(0.5));
    CHECK(q.means(0, 1) == Approx(-0.3));
    CHECK(q.log_weights[0] == Approx(0.0).margin(1e-14));
    CHECK((q.stddev - 0.5 * s.base().kernel().lengthscales).norm() < 1e-15);

    Matrix same(2, 2);
    same << 0.4, 0.1, 0.4, 0.1;
    const ProposalMixture d = build_proposal(s, prior, same, ll);
    REQUIRE(d.n_components() == 1);
    CHECK(d.means.row(0) == same.row(0));
    CHECK(std::exp(d.log_weights[0]) == Approx(1.0));
    CHECK_THROWS_AS(build_proposal(s, prior, same.topRows(1), ll.head(1)), ConfigError);
}

TEST_CASE("midpoint weights match direct evaluation of the score", "[recombination]") {
    Rng rng(7);
    const WarpedSurrogate s = toy_surrogate(rng);
    const GaussianPrior prior = GaussianPrior::isotropic(2);
    const Matrix obs = random_matrix(12, 2, rng);
    Vector ll(12);
    for (int i = 0; i < 12; ++i) ll[i] = -obs.row(i).squaredNorm();
    const ProposalMixture q = build_proposal(s, prior, obs, ll);
    REQUIRE(q.n_components() == 66);
    const Moments g = s.moments_g(q.means);
    Vector score(66);
    for (int i = 0; i < 66; ++i) score[i] = g.cov(i, i) * g.mean[i] * std::exp(prior.log_pdf(q.means.row(i).transpose()));
    score /= score.sum();
    for (int i = 0; i < 66; ++i) CHECK(std::exp(q.log_weights[i]) == Approx(score[i]).epsilon(1e-9));

    ProposalOptions capped;
    capped.max_components = 10;
    const ProposalMixture qc = build_proposal(s, prior, obs, ll, capped);
    CHECK(qc.n_components() == 10);
    CHECK(std::abs(std::exp(log_sum_exp(qc.log_weights)) - 1.0) < 1e-12);
}

TEST_CASE("supersample weights are flat when target equals proposal", "[recombination]") {
    Rng rng(8);
    ProposalMixture q;
    q.means = random_matrix(3, 2, rng);
    q.stddev = Vector::Constant(2, 0.5);
    q.log_weights = Vector::Constant(3, -std::log(3.0));
    const Matrix pts = q.sample(500, rng);
    const Vector lq = q.log_pdf(pts);
    const Supersample ss = weigh_supersample(pts, lq, lq, rng);
    CHECK(ss.log_w.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ss.ess == Approx(500.0));
    CHECK(ss.counts.sum() == Approx(500.0));

    Vector spike = Vector::Constant(500, kNegInf);
    spike[3] = 0.0;
    CHECK_THROWS_AS(weigh_supersample(pts, lq, spike, rng), DegenerateWeights);
}

TEST_CASE("supersampling is reproducible", "[recombination]") {
    Rng rng(9);
    const WarpedSurrogate s = toy_surrogate(rng);
    const GaussianPrior prior = GaussianPrior::isotropic(2);
    const ProposalMixture q = build_proposal(s, prior, s.base().inputs(), s.base().targets());
    Rng a(42), b(42);
    const Supersample sa = supersample(q, s, prior, 300, a);
    const Supersample sb = supersample(q, s, prior, 300, b);
    CHECK(sa.points == sb.points);
    CHECK(sa.log_w == sb.log_w);
    CHECK(sa.resampled == sb.resampled);
}

TEST_CASE("supersample normaliser against a tensor grid", "[recombination][oracle]") {
    Rng rng(10);
    const WarpedSurrogate s = toy_surrogate(rng);
    const GaussianPrior prior = GaussianPrior::isotropic(2);
    const ProposalMixture q = build_proposal(s, prior, s.base().inputs(), s.base().targets());
    // the midpoint mixture is narrow; widen it so that it covers the whole target
    ProposalMixture wide = q;
    wide.stddev = Vector::Constant(2, 1.5);
    Rng r(11);
    const Supersample ss = supersample(wide, s, prior, 200000, r);

    const int n = 401;
    const double lo = -8.0, hi = 8.0, h = (hi - lo) / (n - 1);
    Matrix grid(n * n, 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) grid.row(i * n + j) << lo + i * h, lo + j * h;
    const Vector scores = midpoint_log_scores(s, prior, grid);
    double z = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        if (std::isfinite(scores[i])) z += std::exp(scores[i]) * h * h;
    CHECK(std::exp(ss.log_z) == Approx(z).epsilon(0.05));
}
