#pragma once

#include "ecmbq/bayes.hpp"

#include <map>
#include <optional>
#include <string>

namespace ecmbq {

struct MapEstimate {
    Vector theta;
    double log_lik = kNegInf;
    double log_post = kNegInf;
    Eigen::Index start_index = -1;  // row of the candidate set the polish started from
};

// Best candidate by unnormalised log posterior (first index on ties), then a bounded Nelder-Mead
// polish that is only accepted when it improves.
MapEstimate map_estimate(const Matrix& candidates, const LogLikelihoodFn& loglik, const GaussianPrior& prior,
                         int max_evals = 4000);

// Root mean square over all 2m channel terms.
double rmse(const Vector& theta, const Dataset& data, int n_pairs, LikelihoodMode mode = LikelihoodMode::Residual);

// d ln m - 2 ln l.
double bic(double log_lik, int dim, Eigen::Index m);

// Per-observation log densities ln p(y_j | theta); entries may be -inf.
using PointwiseLogLik = std::function<Vector(const Vector&)>;

// One entry per frequency, real and imaginary channels together.
PointwiseLogLik ecm_pointwise_log_lik(std::shared_ptr<const Dataset> data, int n_pairs,
                                      LikelihoodMode mode = LikelihoodMode::Residual);

// Expected log predictive density sum_j ln sum_s w_s p(y_j | theta_s). Uniform weights when
// `weights` is empty.
double elpd(const Matrix& samples, const Vector& weights, const PointwiseLogLik& pointwise);
double elpd(const Matrix& samples, const Vector& weights, const Dataset& data, int n_pairs,
            LikelihoodMode mode = LikelihoodMode::Residual);

enum class Criterion { Lem, Rmse, Bic, Elpd };
const char* criterion_name(Criterion c);
// True when larger is better.
bool maximised(Criterion c);

struct ModelCriteria {
    int n_pairs = 0;
    double lem = kNegInf;
    double lev_standardized = kNegInf;
    double rmse = std::numeric_limits<double>::infinity();
    double bic = std::numeric_limits<double>::infinity();
    double elpd = kNegInf;
    Vector theta_map;
    long n_evals = 0;
    bool failed = false;
    std::string diagnostic;

    double value(Criterion c) const;
};

struct CriteriaReport {
    std::vector<ModelCriteria> models;
    std::map<Criterion, int> selected_by;  // criterion -> winning model order

    // Fills selected_by from the stored values; failed or non-finite entries never win.
    void select();
    json to_json() const;
    // Models as columns, criteria as rows; the winner of each row is marked with '*'.
    std::string table() const;
};

struct SensitivityRecord {
    double m = 0.0;
    double js = 0.0;
    double snr = 0.0;
    double lem = 0.0;
    double lev = 0.0;
    double bic = 0.0;
    double residual = 0.0;  // (slope * bic + intercept - lem)^2
};

// Pearson correlations over {m, JS, SNR, LEM, LEV}; constant columns get coefficient 0 and a flag.
struct CorrelationResult {
    Matrix coefficients;  // 5 x 5, unit diagonal
    std::vector<bool> zero_variance;
    static const std::vector<std::string>& labels();
};

CorrelationResult correlation_matrix(const std::vector<SensitivityRecord>& records);
double pearson(const Vector& a, const Vector& b, bool* zero_variance = nullptr);

struct BicRegression {
    double slope = 0.0;
    double intercept = 0.0;
    Vector residuals;
};

// Ordinary least squares of LEM on BIC; writes the residual of every record back into it.
BicRegression bic_regression(std::vector<SensitivityRecord>& records);

}  // namespace ecmbq
