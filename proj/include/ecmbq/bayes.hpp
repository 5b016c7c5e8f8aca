#pragma once

#include "ecmbq/dataset.hpp"
#include "ecmbq/io.hpp"

#include <functional>
#include <memory>

namespace ecmbq {

// Log-likelihood returned for parameter sets that violate sum r_i < 1.
inline constexpr double kLogLikFloor = -1e300;

// Theta = {theta, ln sigma^2}; flat layout [r_total, r'_1..N, tau_1..N, ln sigma^2], d = 2 + 2N.
struct Theta {
    EcmParams ecm;
    double log_sigma2 = 0.0;

    Vector to_vector() const;
    static Theta from_vector(const Vector& v, int n_pairs);
};

inline int theta_dim(int n_pairs) { return 2 + 2 * n_pairs; }

enum class LikelihoodMode {
    Residual,        // Gaussian noise on y_obs - y_ecm
    LiteralSquared,  // Gaussian density evaluated at the squared error
};

// Per-channel quantities entering the Gaussian density: residuals (Residual mode) or squared
// residuals (LiteralSquared). Real channel first, then imaginary; length 2m.
Vector residual_terms(const Vector& theta, const Dataset& data, int n_pairs,
                      LikelihoodMode mode = LikelihoodMode::Residual);

// Total function: DegenerateParams maps to kLogLikFloor.
double log_likelihood(const Vector& theta, const Dataset& data, int n_pairs,
                      LikelihoodMode mode = LikelihoodMode::Residual);

using LogLikelihoodFn = std::function<double(const Vector&)>;

LogLikelihoodFn ecm_log_likelihood(std::shared_ptr<const Dataset> data, int n_pairs,
                                   LikelihoodMode mode = LikelihoodMode::Residual);

class GaussianPrior {
public:
    GaussianPrior() = default;
    // Throws NonPsdCovariance when cov is asymmetric beyond 1e-12 or not positive definite.
    GaussianPrior(Vector mean, Matrix cov);

    static GaussianPrior isotropic(int dim, double mean = 0.0, double stddev = 2.0);
    static GaussianPrior from_json(const json& j);
    json to_json() const;

    int dim() const { return static_cast<int>(mean_.size()); }
    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }
    const Matrix& chol() const { return chol_; }
    double log_det() const { return log_det_; }

    double log_pdf(const Vector& x) const;
    // Rows are draws.
    Matrix sample(Eigen::Index n, Rng& rng) const;
    Matrix sample(Eigen::Index n, std::uint64_t seed) const;

private:
    Vector mean_;
    Matrix cov_;
    Matrix chol_;  // lower triangular
    double log_det_ = 0.0;
};

double log_posterior_unnorm(const Vector& theta, const Dataset& data, const GaussianPrior& prior, int n_pairs,
                            LikelihoodMode mode = LikelihoodMode::Residual);

}  // namespace ecmbq
