#include <catch2/catch_amalgamated.hpp>

#include "ecmbq/dataset.hpp"
#include "ecmbq/errors.hpp"
#include "ecmbq/identifiability.hpp"

#include "oracles.hpp"

using namespace ecmbq;
using Catch::Approx;

namespace {

const double kLn2 = std::log(2.0);

EcmParams pair_params(double r1, double r2, double t1, double t2, double r_total = 0.0) {
    EcmParams p;
    p.r_total = r_total;
    p.r_prime.resize(2);
    p.r_prime << inverse_resistance_fraction(r1), inverse_resistance_fraction(r2);
    p.tau_std.resize(2);
    p.tau_std << t1, t2;
    return p;
}

// Wide window so that every peak sits far from the edges.
FrequencyStandardization wide_grid() { return standardize(log_spaced_freqs(200, 20.0)); }

double stddev(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("x csch x is continuous at zero", "[identifiability]") {
    CHECK(x_csch_x(0.0) == 1.0);
    CHECK(x_csch_x(1e-6) == Approx(1.0).epsilon(1e-12));
    CHECK(x_csch_x(2.0) == Approx(2.0 / std::sinh(2.0)).epsilon(1e-14));
    CHECK(x_csch_x(-2.0) == x_csch_x(2.0));
    Vector lam(2), c(2);
    lam << 0.3, 0.7;
    c << 1.0, 1.0;
    CHECK(snr_overlap_term(lam, c) == Approx(0.09 + 0.49 + 2 * 0.21).epsilon(1e-14));
}

TEST_CASE("doubling the noise lowers the SNR by ln 2", "[identifiability]") {
    const EcmParams p = pair_params(0.3, 0.4, -0.5, 0.5);
    const auto grid = wide_grid();
    CHECK(snr_analytic(p, grid, -3.0) - snr_analytic(p, grid, -3.0 + kLn2) == Approx(kLn2).epsilon(1e-12));
}

TEST_CASE("SNR is invariant to a joint resistance and noise rescaling", "[identifiability][property]") {
    const auto grid = wide_grid();
    Rng rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        EcmParams p = pair_params(0.1 + 0.2 * (u(rng) + 1.0), 0.1 + 0.2 * (u(rng) + 1.0), 0.5 * u(rng), 0.5 * u(rng));
        const double before = snr_analytic(p, grid, -4.0);
        const double shift = 2.0 * u(rng);
        p.r_total += shift;
        CHECK(std::abs(snr_analytic(p, grid, -4.0 + 2.0 * shift) - before) < 1e-9);
    }
}

TEST_CASE("SNR against Monte-Carlo integration", "[identifiability][oracle]") {
    const auto grid = wide_grid();
    const Vector lw = grid.log_omega();
    const double a = lw.minCoeff(), b = lw.maxCoeff();
    Rng rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 5; ++k) {
        const EcmParams p = pair_params(0.05 + 0.4 * u(rng), 0.05 + 0.4 * u(rng), u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
        const double var = oracle::im_variance_mc(p, grid, a, b, 2000000, 10 + k);
        const double mc_snr = std::log(var) - (-5.0);
        CHECK(std::abs(snr_analytic(p, grid, -5.0) - mc_snr) <= 1e-3);
    }
}

TEST_CASE("SNR rejects windows too narrow for the moments", "[identifiability]") {
    const EcmParams p = pair_params(0.3, 0.4, -0.5, 0.5);
    const auto grid = standardize(log_spaced_freqs(10, 0.1));
    CHECK_THROWS_AS(snr_analytic(p, grid, -3.0, 0.0, 0.01), InvalidGrid);
}

TEST_CASE("JS of identical peaks is zero", "[identifiability]") {
    const EcmParams p = pair_params(0.3, 0.3, 0.2, 0.2);
    CHECK(std::abs(js_divergence(p, wide_grid(), 0, 1, 100000, 1)) <= 1e-3);
}

TEST_CASE("JS is symmetric", "[identifiability]") {
    const EcmParams p = pair_params(0.2, 0.5, -0.3, 0.1);
    const auto grid = wide_grid();
    CHECK(std::abs(js_divergence(p, grid, 0, 1, 200000, 3) - js_divergence(p, grid, 1, 0, 200000, 3)) <= 1e-3);
}

TEST_CASE("JS of far separated peaks approaches ln 2", "[identifiability]") {
    const EcmParams p = pair_params(0.3, 0.3, -10.0, 10.0);
    CHECK(std::abs(js_divergence(p, standardize(log_spaced_freqs(50, 7.0)), 0, 1, 100000, 4) - kLn2) <= 1e-2);
}

TEST_CASE("JS stays within [0, ln 2]", "[identifiability][property]") {
    const auto grid = standardize(log_spaced_freqs(100, 7.0));
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 30; ++k) {
        const EcmParams p = pair_params(0.05 + 0.4 * u(rng), 0.05 + 0.4 * u(rng), 4 * u(rng) - 2, 4 * u(rng) - 2);
        const double js = js_divergence(p, grid, 0, 1, 10000, static_cast<std::uint64_t>(k));
        CHECK(js >= 0.0);
        CHECK(js <= kLn2);
    }
}

TEST_CASE("JS estimator error shrinks as one over root N", "[identifiability][property]") {
    const EcmParams p = pair_params(0.2, 0.4, -0.2, 0.3);
    const auto grid = standardize(log_spaced_freqs(100, 7.0));
    std::vector<double> small, large;
    for (std::uint64_t s = 0; s < 20; ++s) {
        small.push_back(js_divergence(p, grid, 0, 1, 10000, 100 + s));
        large.push_back(js_divergence(p, grid, 0, 1, 40000, 200 + s));
    }
    const double ratio = stddev(small) / stddev(large);
    CHECK(ratio > 2.0 * 0.7);
    CHECK(ratio < 2.0 * 1.3);
}

TEST_CASE("JS input validation", "[identifiability]") {
    const EcmParams p = pair_params(0.2, 0.4, -0.2, 0.3);
    const auto grid = wide_grid();
    CHECK_THROWS_AS(js_divergence(p, grid, 0, 0, 10000, 0), ConfigError);
    CHECK_THROWS_AS(js_divergence(p, grid, 0, 2, 10000, 0), ConfigError);
    CHECK_THROWS_AS(js_divergence(p, grid, 0, 1, 100, 0), ConfigError);
}

TEST_CASE("rectified Gaussian mean", "[identifiability]") {
    CHECK(rectified_mean(0.5, 0.0) == 0.5);
    CHECK(rectified_mean(-0.5, 0.0) == 0.0);
    CHECK(rectified_mean(0.0, 1.0) == Approx(1.0 / std::sqrt(2.0 * kPi)));
    CHECK(rectified_mean(10.0, 1.0) == Approx(10.0).epsilon(1e-12));
}

TEST_CASE("noisy JS reduces to the noise-free value without noise", "[identifiability]") {
    const EcmParams p = pair_params(0.25, 0.35, -0.2, 0.4);
    const auto grid = wide_grid();
    const double clean = js_divergence(p, grid, 0, 1, 400000, 7);
    const double noisy = js_noisy(p, grid, 0, 1, NoisePrior{-60.0, 0.0}, 400000, 7, 4);
    CHECK(std::abs(noisy - clean) <= 2e-3);
}

TEST_CASE("noisy JS is finite and bounded", "[identifiability][property]") {
    const auto grid = standardize(log_spaced_freqs(100, 7.0));
    Rng rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        const EcmParams p = pair_params(0.05 + 0.4 * u(rng), 0.05 + 0.4 * u(rng), 4 * u(rng) - 2, 4 * u(rng) - 2);
        const NoisePrior np{-10.0 * u(rng), 2.0 * u(rng)};
        const double js = js_noisy(p, grid, 0, 1, np, 10000, static_cast<std::uint64_t>(k), 16);
        CHECK(std::isfinite(js));
        CHECK(js >= 0.0);
        CHECK(js <= kLn2);
    }
}

TEST_CASE("noisy JS against a dense grid marginalisation", "[identifiability][oracle]") {
    const EcmParams p = pair_params(0.3, 0.2, -0.3, 0.2);
    const auto grid = standardize(log_spaced_freqs(60, 5.0));
    const NoisePrior np{-6.0, 1.0};
    const double est = js_noisy(p, grid, 0, 1, np, 400000, 11, 64);

    const PhysicalParams ph = to_physical(p, grid);
    const Vector lw = grid.log_omega();
    const double xa = lw.minCoeff() - grid.mu_omega, xb = lw.maxCoeff() - grid.mu_omega;
    const int nx = 4001, nz = 201, ne = 201;
    // noise variance on a z grid (log-normal), the inner noise expectation on an e grid
    std::vector<double> zw(nz), s2(nz);
    double zsum = 0.0;
    for (int k = 0; k < nz; ++k) {
        const double z = -8.0 + 16.0 * k / (nz - 1);
        zw[static_cast<std::size_t>(k)] = std::exp(-0.5 * z * z);
        zsum += zw[static_cast<std::size_t>(k)];
        s2[static_cast<std::size_t>(k)] = std::exp(np.mu_sigma + np.sigma_sigma * z);
    }
    auto marginal = [&](double x, double lambda, double centre) {
        const double mean = lambda / kPi / std::cosh(lambda * (x - centre));
        double acc = 0.0;
        for (int k = 0; k < nz; ++k) {
            const double sd = std::sqrt(s2[static_cast<std::size_t>(k)]);
            double inner = 0.0, norm = 0.0;
            for (int e = 0; e < ne; ++e) {
                const double t = -8.0 + 16.0 * e / (ne - 1);
                const double w = std::exp(-0.5 * t * t);
                inner += w * std::max(mean + sd * t, 0.0);
                norm += w;
            }
            acc += zw[static_cast<std::size_t>(k)] * inner / norm;
        }
        return acc / zsum;
    };
    const double ci = grid.sigma_omega * p.tau_std[0], cj = grid.sigma_omega * p.tau_std[1];
    std::vector<double> pa(nx), pb(nx);
    const double h = (xb - xa) / (nx - 1);
    double za = 0.0, zb = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double x = xa + i * h;
        const double wt = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
        pa[static_cast<std::size_t>(i)] = marginal(x, ph.lambda[0], ci);
        pb[static_cast<std::size_t>(i)] = marginal(x, ph.lambda[1], cj);
        za += wt * h * pa[static_cast<std::size_t>(i)];
        zb += wt * h * pb[static_cast<std::size_t>(i)];
    }
    double js = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double wt = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
        const double a = pa[static_cast<std::size_t>(i)] / za, b = pb[static_cast<std::size_t>(i)] / zb;
        const double m = 0.5 * (a + b);
        js += wt * h * 0.5 * (a * std::log(a / m) + b * std::log(b / m));
    }
    CHECK(std::abs(est - js) <= 1e-2);
}

TEST_CASE("sech identities", "[identifiability]") {
    const IdentityReport r = sech_identities_check();
    REQUIRE(r.checks.size() == 7);
    for (const auto& c : r.checks) {
        INFO(c.name);
        if (c.name.find("(x-a)/b") != std::string::npos) {
            CHECK(c.numeric == Approx(2.0 * kPi).epsilon(1e-8));
        } else {
            CHECK(c.deviation < 1e-8);
        }
    }
    CHECK(r.scaled_form_match == "pi*b");
    CHECK(r.to_json()["checks"].size() == 7);
}

TEST_CASE("identifiability report", "[identifiability]") {
    EcmParams p;
    p.r_total = 0.0;
    p.r_prime.resize(3);
    p.r_prime << inverse_resistance_fraction(0.25), inverse_resistance_fraction(0.3), inverse_resistance_fraction(0.2);
    p.tau_std.resize(3);
    p.tau_std << -0.98, 0.98, 0.9026;
    const auto grid = standardize(log_spaced_freqs(100, 7.0));
    const IdentifiabilityReport r = identifiability_report(p, grid, -1.6, 20000, 1, false);
    CHECK(r.m == 100);
    CHECK(r.js_pairs.size() == 3);
    CHECK(r.js_noisy_pairs.empty());
    for (const auto& [k, v] : r.js_pairs) {
        CHECK(v >= 0.0);
        CHECK(v <= kLn2);
        CHECK(r.delta_tau.at(k) >= 0.0);
    }
    CHECK(r.delta_tau.at({1, 2}) == Approx(grid.sigma_omega * (0.98 - 0.9026)));
    CHECK(r.js_pairs.at({1, 2}) < r.js_pairs.at({0, 1}));
    const json j = r.to_json();
    CHECK(j["js"][0]["i"] == 1);
    CHECK(std::isfinite(j["snr"].get<double>()));
}
