#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.

#include "ecmbq/bayes.hpp"
#include "ecmbq/dataset.hpp"

#include <cmath>

namespace oracle {

using ecmbq::Vector;

// Variance of -Im Z over ln(omega) uniform on [a, b], from the textbook RC formula on a stratified
// sample of n points.
inline double im_variance_mc(const ecmbq::EcmParams& p, const ecmbq::FrequencyStandardization& grid, double a,
                             double b, long n, std::uint64_t seed) {
    const ecmbq::PhysicalParams ph = ecmbq::to_physical(p, grid);
    ecmbq::Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    long double s1 = 0.0L, s2 = 0.0L;
    for (long k = 0; k < n; ++k) {
        const double lw = a + (b - a) * (static_cast<double>(k) + u(rng)) / static_cast<double>(n);
        const double w = std::exp(lw);
        double im = 0.0;
        for (Eigen::Index i = 0; i < ph.R.size(); ++i) {
            const double wt = w * ph.tau[i];
            im += ph.R[i] * wt / (1.0 + wt * wt);
        }
        s1 += im;
        s2 += static_cast<long double>(im) * im;
    }
    const long double m1 = s1 / n;
    return static_cast<double>(s2 / n - m1 * m1);
}

// Closed-form evidence of N(x; c, s^2 I) under a N(0, v I) prior.
struct Conjugate {
    Vector centre;
    double sd = 0.3;
    double prior_var = 4.0;

    ecmbq::LogLikelihoodFn loglik() const {
        return [c = centre, s = sd](const Vector& x) {
            double v = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) v += ecmbq::log_normal_pdf(x[i], c[i], s * s);
            return v;
        };
    }
    double log_evidence() const {
        double v = 0.0;
        for (Eigen::Index i = 0; i < centre.size(); ++i) v += ecmbq::log_normal_pdf(centre[i], 0.0, prior_var + sd * sd);
        return v;
    }
};

}  // namespace oracle
