#pragma once

#include "ecmbq/gp.hpp"

#include <array>
#include <string>

namespace ecmbq {

// Which layers of the e -> f -> g -> h chain are active. Inactive layers are identities:
//   scaling  f = exp(y - beta)       (otherwise f = exp(y))
//   sqrt     g = sqrt(2 (f - alpha)) (otherwise g = f)
//   log      h = ln(g + 1)           (otherwise h = g)
struct WarpConfig {
    bool log_layer = true;
    bool sqrt_layer = true;
    bool scaling = true;

    bool full() const { return log_layer && sqrt_layer && scaling; }
    std::string label() const;
    static std::array<WarpConfig, 6> ablation_set();
};

struct WarpConstants {
    double alpha = 0.0;  // min of f over the observations (zero without the sqrt layer)
    double beta = 0.0;   // max observed log-likelihood (zero without the scaling layer)
};

WarpConstants warp_constants(const Vector& log_liks, const WarpConfig& cfg = {});

// Log-likelihoods to base-GP targets. Throws NegativeRadicand if f < alpha - 1e-15 and
// NumericOverflow if a value leaves the double range.
Vector warp_forward(const Vector& log_liks, const WarpConstants& c, const WarpConfig& cfg = {});
Vector warp_backward(const Vector& h, const WarpConstants& c, const WarpConfig& cfg = {});

struct Moments {
    Vector mean;
    Matrix cov;
};

// e-space moments held in the log domain: ln mu_f + beta and ln|sigma_f| + 2 beta with signs.
struct LogMoments {
    Vector log_mean;
    Matrix log_abs_cov;
    Matrix cov_sign;
};

// Moment-matched pushforward of a base GP through the active layers.
class WarpedSurrogate {
public:
    WarpedSurrogate(GpState base, WarpConstants consts, WarpConfig cfg = {})
        : base_(std::move(base)), consts_(consts), cfg_(cfg) {}

    const GpState& base() const { return base_; }
    const WarpConstants& consts() const { return consts_; }
    const WarpConfig& config() const { return cfg_; }

    Moments moments_h(const Matrix& Q) const;
    Moments moments_g(const Matrix& Q) const;
    Moments moments_f(const Matrix& Q) const;
    LogMoments moments_e_log(const Matrix& Q) const;

    // Diagonal-only variants, linear in the number of query points.
    void mean_var_g(const Matrix& Q, Vector& mean, Vector& var) const;
    Vector mean_f(const Matrix& Q) const;
    // Cross covariance of g between two point sets.
    Matrix cov_g(const Matrix& A, const Matrix& B) const;

private:
    GpState base_;
    WarpConstants consts_;
    WarpConfig cfg_;
};

// Pointwise pushforward formulas, exposed for testing against sampling oracles.
// exp(h) - 1 with h ~ N(mu_h, cov_h).
Moments lognormal_minus_one(const Vector& mu_h, const Matrix& cov_h);
// alpha + g^2 / 2 with g ~ N(mu_g, cov_g).
Moments half_square(const Vector& mu_g, const Matrix& cov_g, double alpha);

}  // namespace ecmbq
