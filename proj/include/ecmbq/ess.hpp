#pragma once

#include "ecmbq/bayes.hpp"
#include "ecmbq/criteria.hpp"

#include <string>

namespace ecmbq {

struct EssConfig {
    long n_steps = 5000;      // chain length including burn-in
    long burn_in = -1;        // negative: 10% of the steps taken
    long max_evals = 0;       // when positive, the chain stops once this many likelihood calls are spent
    std::uint64_t seed = 0;
    int max_shrink = 100;     // bracket shrinks per step before the step is abandoned

    json to_json() const;
};

struct EssChain {
    Matrix samples;             // post burn-in states, one per row
    Vector log_liks;
    std::vector<long> evals_at;  // cumulative likelihood calls when each kept state was reached
    std::vector<double> time_at;  // seconds since the start, likewise
    long n_evals = 0;           // every likelihood call, burn-in included
    int max_shrinks = 0;        // largest number of bracket shrinks needed in any step
    long abandoned_steps = 0;   // steps that hit max_shrink and kept the current state
};

// Elliptical slice sampling targeting loglik x prior for a Gaussian prior.
EssChain run_ess(const LogLikelihoodFn& loglik, const GaussianPrior& prior, const EssConfig& cfg);

struct CurveRow {
    long n_evals = 0;
    double wall_time_s = 0.0;
    long n_samples = 0;
    double value = kNegInf;
};

// ELPD of the kept prefix reached within each scheduled evaluation count. Schedule entries that
// precede the first kept sample are skipped; the output is ordered by n_evals.
std::vector<CurveRow> elpd_checkpoints(const EssChain& chain, const PointwiseLogLik& pointwise,
                                       std::vector<long> schedule);

// Same columns as the BASQ learning curve; ELPD goes in the lem column and lev is left empty.
std::string curve_csv(const std::vector<CurveRow>& rows);

}  // namespace ecmbq
