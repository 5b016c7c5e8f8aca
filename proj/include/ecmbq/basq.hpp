#pragma once

#include "ecmbq/bayes.hpp"
#include "ecmbq/io.hpp"
#include "ecmbq/recombination.hpp"
#include "ecmbq/warp.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace ecmbq {

struct BasqConfig {
    int batch_size = 100;
    int max_iters = 25;
    double conv_tol = 0.5;  // |delta LEV| threshold in nats
    int plateau_window = 3;
    std::uint64_t seed = 0;

    Eigen::Index n_super = 4000;
    int n_gp_max = 400;  // GP conditioning set: best points by log-likelihood
    int n_fit_max = 150;  // hyperparameter fit set
    int hyper_restarts = 2;
    double uncertainty_ratio = 1.0;  // below 1, mixes mu_g^2 * pi into the batch target with weight 1 - r
    ProposalOptions proposal;
    WarpConfig warp;

    json to_json() const;
    static BasqConfig from_json(const json& j);
    static BasqConfig from_json(const json& j, BasqConfig defaults);
};

struct EvidenceEstimate {
    double lem = kNegInf;
    double lev = kNegInf;
    double lev_standardized = kNegInf;  // lev - 2 beta
    long n_evals = 0;
    double wall_time_s = 0.0;
    bool overflow = false;
    std::string diagnostic;

    json to_json() const;
};

struct RunHistory {
    std::vector<EvidenceEstimate> snapshots;
};

struct BasqResult {
    EvidenceEstimate estimate;
    RunHistory history;
    Matrix observed;  // every queried point, in query order
    Vector log_liks;
    std::optional<WarpedSurrogate> surrogate;
    std::optional<ProposalMixture> proposal;
    bool converged = false;
    int iterations = 0;
    int node_count = 0;       // evidence nodes of the last iteration
    int landmark_count = 0;
};

// LEM = ln sum W mu_f + beta and LEV = ln sum sum W W sigma_f + 2 beta, in the log domain.
// A non-positive sum yields -inf with a diagnostic.
EvidenceEstimate evidence(const WarpedSurrogate& s, const QuadratureNodes& nodes);

// Fits the warped surrogate to (X, y): re-warps every target with fresh alpha/beta, conditions on
// the best n_gp_max points and fits hyperparameters on the best n_fit_max.
WarpedSurrogate fit_surrogate(const Matrix& X, const Vector& y, const BasqConfig& cfg, int dim,
                              const std::optional<Kernel>& warm, int restarts, std::uint64_t seed);

// The engine proper. The likelihood is injectable so that closed-form models can anchor it.
BasqResult run_basq(const LogLikelihoodFn& loglik, const GaussianPrior& prior, const BasqConfig& cfg);
BasqResult run_basq(const Dataset& data, const GaussianPrior& prior, int n_pairs, const BasqConfig& cfg,
                    LikelihoodMode mode = LikelihoodMode::Residual);

struct WeightedSamples {
    Matrix points;
    Vector weights;  // normalised
    double ess = 0.0;
};

// Self-normalised importance samples of mu_f * prior with the run's final proposal, weights truncated at
// sqrt(n) times their mean; throws
// DegenerateWeights when ESS < 10.
WeightedSamples posterior_samples(const BasqResult& run, const GaussianPrior& prior, Eigen::Index n,
                                  std::uint64_t seed);

json history_to_json(const RunHistory& h);
// Columns iter,n_evals,wall_time_s,lem,lev.
std::string learning_curve_csv(const RunHistory& h);

}  // namespace ecmbq
