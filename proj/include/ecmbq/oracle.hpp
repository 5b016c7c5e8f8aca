#pragma once

#include "ecmbq/bayes.hpp"

namespace ecmbq {

// Brute-force reference evidence: multi-start MAP search, a Laplace fit per mode, then importance
// sampling from a Student-t mixture (plus a small prior component) built on the Laplace fits.
struct OracleConfig {
    Eigen::Index n_samples = 1000000;
    int n_starts = 12;
    int max_modes = 4;
    double t_dof = 5.0;
    double scale_inflation = 1.5;
    double prior_fraction = 0.05;
    std::uint64_t seed = 0;
};

struct OracleMode {
    Vector location;
    Matrix cov;
    double log_post = 0.0;
    double laplace_log_evidence = 0.0;
};

struct OracleResult {
    double log_evidence = kNegInf;
    double std_error = 0.0;  // delta-method standard error of log_evidence
    double ess = 0.0;
    std::vector<OracleMode> modes;
};

// Central-difference Hessian.
Matrix numerical_hessian(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-4);

std::vector<OracleMode> find_modes(const LogLikelihoodFn& loglik, const GaussianPrior& prior, const OracleConfig& cfg);

OracleResult oracle_evidence(const LogLikelihoodFn& loglik, const GaussianPrior& prior, const OracleConfig& cfg = {});

}  // namespace ecmbq
