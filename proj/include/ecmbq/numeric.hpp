#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace ecmbq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kLn2Pi = 1.8378770664093454836;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(std::span<const double> xs) {
    double mx = kNegInf;
    for (double x : xs) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

inline double log_sum_exp(const Vector& xs) {
    return log_sum_exp(std::span<const double>(xs.data(), static_cast<std::size_t>(xs.size())));
}

// ln(exp(a) + exp(b))
inline double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (!std::isfinite(b)) return a;
    return a + std::log1p(std::exp(b - a));
}

inline double log_normal_pdf(double x, double mean, double var) {
    const double r = x - mean;
    return -0.5 * (kLn2Pi + std::log(var) + r * r / var);
}

// Kish effective sample size of unnormalised log-weights.
inline double effective_sample_size(const Vector& log_w) {
    const double lse = log_sum_exp(log_w);
    if (!std::isfinite(lse)) return 0.0;
    double s2 = 0.0;
    for (Eigen::Index i = 0; i < log_w.size(); ++i) {
        const double w = std::exp(log_w[i] - lse);
        s2 += w * w;
    }
    return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

// Systematic resampling; returns indices into the weight vector.
inline std::vector<Eigen::Index> systematic_resample(const Vector& log_w, std::size_t n, Rng& rng) {
    const double lse = log_sum_exp(log_w);
    std::vector<Eigen::Index> out;
    out.reserve(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u0 = unif(rng) / static_cast<double>(n);
    double cum = std::exp(log_w[0] - lse);
    Eigen::Index j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = u0 + static_cast<double>(i) / static_cast<double>(n);
        while (u > cum && j + 1 < log_w.size()) {
            ++j;
            cum += std::exp(log_w[j] - lse);
        }
        out.push_back(j);
    }
    return out;
}

inline Vector standard_normal(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = nd(rng);
    return z;
}

}  // namespace ecmbq
