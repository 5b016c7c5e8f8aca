#pragma once

#include "ecmbq/bayes.hpp"
#include "ecmbq/warp.hpp"

#include <functional>

namespace ecmbq {

// Gaussian mixture with a shared diagonal covariance.
struct ProposalMixture {
    Matrix means;        // K x d
    Vector stddev;       // d
    Vector log_weights;  // normalised
    bool prior_fallback = false;

    Eigen::Index n_components() const { return means.rows(); }
    Vector log_pdf(const Matrix& X) const;
    Matrix sample(Eigen::Index n, Rng& rng) const;
};

struct ProposalOptions {
    int top_points = 64;        // all pairs among the best observations by log-likelihood
    int max_components = 2048;  // highest scoring midpoints kept beyond this
};

// Log of the midpoint score sigma_g * mu_g * prior; -inf where mu_g <= 0.
Vector midpoint_log_scores(const WarpedSurrogate& s, const GaussianPrior& prior, const Matrix& mids);

// Midpoint mixture over pairs of observed points, components at half the GP lengthscale.
ProposalMixture build_proposal(const WarpedSurrogate& s, const GaussianPrior& prior, const Matrix& observed,
                               const Vector& log_liks, const ProposalOptions& opts = {});

struct Supersample {
    Matrix points;    // N x d draws from the proposal
    Vector log_q;     // proposal log-density
    Vector log_w;     // log A~(x) - log q(x), unnormalised
    double log_z = 0.0;  // log mean importance weight
    double ess = 0.0;
    // Equal-weight draws from A~ after systematic resampling, merged into unique points with counts.
    std::vector<Eigen::Index> resampled;
    Vector counts;
};

// Importance weights of draws against a log target; throws DegenerateWeights when ESS < 2.
Supersample weigh_supersample(Matrix points, Vector log_q, const Vector& log_target, Rng& rng);

// Draws n_super points from the proposal and weighs them against sigma_g * mu_g * prior.
Supersample supersample(const ProposalMixture& q, const WarpedSurrogate& s, const GaussianPrior& prior,
                        Eigen::Index n_super, Rng& rng);

struct QuadratureNodes {
    Matrix points;
    Vector weights;
    std::vector<Eigen::Index> indices;  // rows of the candidate matrix
};

// Positive reweighting of at most M + 1 candidates (M = features.cols()) preserving the total mass and
// the weighted feature sums. Dependent features are projected out rather than failing.
QuadratureNodes recombine(const Matrix& candidates, const Matrix& features, const Vector& weights);

// Nystrom features of a covariance function at the landmarks: k(C, L) K_LL^{-1/2}.
using CrossCov = std::function<Matrix(const Matrix&, const Matrix&)>;
Matrix nystrom_features(const CrossCov& cov, const Matrix& candidates, const Matrix& landmarks);

}  // namespace ecmbq
