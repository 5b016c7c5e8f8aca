#pragma once

#include "ecmbq/numeric.hpp"

#include <optional>

namespace ecmbq {

// Squared-exponential ARD kernel: k(a, b) = s * exp(-0.5 * sum_k ((a_k - b_k) / l_k)^2).
struct Kernel {
    double output_scale = 1.0;
    Vector lengthscales;

    int dim() const { return static_cast<int>(lengthscales.size()); }
    bool valid() const;
    double operator()(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const;
    // Rows of A and B are points.
    Matrix matrix(const Matrix& A, const Matrix& B) const;
};

// Exact GP posterior with zero prior mean. Immutable after construction.
class GpState {
public:
    // Factorises K + jitter*I, starting at min_rel_jitter * output_scale and growing by 10x up to
    // 1e-4 * output_scale; throws CholeskyFailure beyond that. An empty input set is allowed and
    // behaves as the prior.
    GpState(Kernel kernel, Matrix inputs, Vector targets, double min_rel_jitter = 1e-10);

    const Kernel& kernel() const { return kernel_; }
    const Matrix& inputs() const { return inputs_; }
    const Vector& targets() const { return targets_; }
    double jitter() const { return jitter_; }
    Eigen::Index n() const { return inputs_.rows(); }
    int dim() const { return kernel_.dim(); }

    Vector predict_mean(const Matrix& Q) const;
    // Posterior covariance between the rows of A and B.
    Matrix predict_cov(const Matrix& A, const Matrix& B) const;
    // Symmetric posterior covariance of Q with the diagonal clamped at zero.
    Matrix predict_cov(const Matrix& Q) const;
    Vector predict_var(const Matrix& Q) const;

    // L^{-1} k(X, Q); building block for callers that need several products.
    Matrix whitened_cross(const Matrix& Q) const;
    // Mean, variance and whitened cross-covariance from one triangular solve.
    void predict_parts(const Matrix& Q, Matrix& V, Vector& mean, Vector& var) const;

private:
    Kernel kernel_;
    Matrix inputs_;
    Vector targets_;
    double jitter_ = 0.0;
    Matrix chol_;  // lower triangular
    Vector alpha_;
};

// Log marginal likelihood of the targets; when grad is given it receives the derivative with respect
// to [ln s, ln l_1..l_d].
double log_marginal_likelihood(const Kernel& kernel, const Matrix& X, const Vector& y, double rel_nugget,
                               Vector* grad = nullptr);

struct HyperFitOptions {
    int restarts = 3;
    std::uint64_t seed = 0;
    int max_iters = 200;
    double rel_nugget = 1e-8;
    std::optional<Kernel> warm_start;
    double min_output_scale = 1e-8;
    double max_output_scale = 1e4;
    // Lengthscale bounds as multiples of the per-dimension input spread, or of `reference_spread`
    // when that is given.
    double min_rel_lengthscale = 0.01;
    double max_rel_lengthscale = 10.0;
    std::optional<Vector> reference_spread;
    // When positive, a normal prior with this sd on each ln lengthscale, centred on ln spread,
    // turning the fit into a MAP-II estimate.
    double log_lengthscale_prior_sd = 0.0;
};

// Maximises the log marginal likelihood (plus the optional lengthscale prior) with quasi-Newton steps from a warm start and seeded restarts.
// Never fails: the best kernel found is returned even without convergence.
Kernel fit_hyperparams(const Matrix& X, const Vector& y, const HyperFitOptions& opts = {});

}  // namespace ecmbq
