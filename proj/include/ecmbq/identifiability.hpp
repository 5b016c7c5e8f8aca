#pragma once

#include "ecmbq/ecm_model.hpp"
#include "ecmbq/io.hpp"

#include <map>
#include <string>
#include <utility>

namespace ecmbq {

// Log ratio of the variance of Im[Z] over a uniform ln(omega) window [a, b] to the noise variance,
// using the infinite-domain sech integrals for the two moments.
double snr_analytic(const EcmParams& p, const FrequencyStandardization& grid, double log_sigma2);

// Same, with explicit ln(omega) bounds.
double snr_analytic(const EcmParams& p, const FrequencyStandardization& grid, double log_sigma2, double a, double b);

// sum_i lambda_i^2 + sum_{i<j} 2 lambda_i lambda_j D_ij csch(D_ij), with x csch x -> 1 at zero.
double snr_overlap_term(const Vector& lambda, const Vector& centres);

// x / sinh(x), continuous at 0.
double x_csch_x(double x);

// ln of the scaled sech density (lambda/pi) sech(lambda (x - c)).
double log_scaled_sech_pdf(double x, double lambda, double c);

// Pairwise JS divergence between the scaled sech peaks of RC pairs i and j, estimated by importance
// sampling from a sech mixture proposal. The estimate is self-normalised, so it lies in [0, ln 2].
double js_divergence(const EcmParams& p, const FrequencyStandardization& grid, int i, int j, long n_is,
                     std::uint64_t seed);

struct NoisePrior {
    double mu_sigma = 0.0;     // mean of ln sigma_n^2
    double sigma_sigma = 1.0;  // sd of ln sigma_n^2
};

// Noise-marginalised peak density on the measurement window: E[max(P(x) + e, 0)] with
// e ~ N(0, s2) and s2 ~ LogNormal(mu_sigma, sigma_sigma), normalised over [a, b].
// The inner Gaussian expectation is closed form; the outer one uses `noise_draws`.
double rectified_mean(double mean, double s2);

// JS divergence between the noise-marginalised peaks. Noise variances are in the units of the
// normalised sech densities.
double js_noisy(const EcmParams& p, const FrequencyStandardization& grid, int i, int j, const NoisePrior& noise,
                long n_is, std::uint64_t seed, int n_noise = 64);

// Noise prior matching a dataset's noise level, rescaled into units of the normalised densities.
NoisePrior noise_prior_for(const EcmParams& p, const FrequencyStandardization& grid, double log_sigma2,
                           double sigma_sigma = 2.0);

struct IdentityCheck {
    std::string name;
    double numeric = 0.0;
    double expected = 0.0;
    double deviation = 0.0;
    std::string note;
};

struct IdentityReport {
    std::vector<IdentityCheck> checks;
    // Which closed form the scaled-argument integral matched: "pi*b" or "pi/b".
    std::string scaled_form_match;
    json to_json() const;
};

// Adaptive Gauss-Kronrod evaluation of the sech integrals on [-50, 50].
IdentityReport sech_identities_check();

struct IdentifiabilityReport {
    Eigen::Index m = 0;
    double snr = 0.0;
    std::map<std::pair<int, int>, double> js_pairs;
    std::map<std::pair<int, int>, double> js_noisy_pairs;
    std::map<std::pair<int, int>, double> delta_tau;

    json to_json() const;
};

IdentifiabilityReport identifiability_report(const EcmParams& p, const FrequencyStandardization& grid,
                                             double log_sigma2, long n_is, std::uint64_t seed,
                                             bool with_noisy = true);

}  // namespace ecmbq
