#include <catch2/catch_amalgamated.hpp>

#include "ecmbq/dataset.hpp"
#include "ecmbq/errors.hpp"

#include <filesystem>
#include <fstream>

using namespace ecmbq;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

EcmParams two_pair() {
    EcmParams p;
    p.r_total = 0.2;
    p.r_prime.resize(2);
    p.r_prime << inverse_resistance_fraction(0.3), inverse_resistance_fraction(0.4);
    p.tau_std.resize(2);
    p.tau_std << -0.9, 0.9;
    return p;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ecmbq_test_dataset_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("two-point standardisation", "[dataset]") {
    Vector f(2);
    f << 1.0 / (2 * kPi), std::exp(1.0) / (2 * kPi);
    const auto s = standardize(f);
    CHECK(s.mu_omega == Approx(0.5));
    CHECK(s.sigma_omega == Approx(0.5));
    CHECK(s.omega_std[0] == Approx(-1.0));
    CHECK(s.omega_std[1] == Approx(1.0));
}

TEST_CASE("standardised grid has zero mean and unit variance", "[dataset][property]") {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = static_cast<Eigen::Index>(2 + 300 * u(rng));
        Vector f(m);
        double cur = 1e-3 * (1.0 + u(rng));
        for (Eigen::Index i = 0; i < m; ++i) {
            cur *= 1.0 + 0.5 * u(rng) + 1e-6;
            f[i] = cur;
        }
        const auto s = standardize(f);
        CHECK(s.sigma_omega > 0.0);
        CHECK(std::abs(s.omega_std.mean()) < 1e-10);
        CHECK(std::abs((s.omega_std.array().square()).mean() - 1.0) < 1e-10);
    }
}

TEST_CASE("sigma of a log grid from 1 mHz to 10 kHz", "[dataset]") {
    const Eigen::Index m = 100;
    Vector f(m);
    for (Eigen::Index i = 0; i < m; ++i) f[i] = std::pow(10.0, -3.0 + 7.0 * static_cast<double>(i) / (m - 1));
    // long double recomputation from the exponents
    long double mean = 0.0L, sq = 0.0L;
    for (Eigen::Index i = 0; i < m; ++i) {
        const long double lw = std::log(2.0L * 3.14159265358979323846264338327950288L) +
                               (-3.0L + 7.0L * static_cast<long double>(i) / (m - 1)) * std::log(10.0L);
        mean += lw;
        sq += lw * lw;
    }
    mean /= m;
    const long double var = sq / m - mean * mean;
    const auto s = standardize(f);
    CHECK(s.sigma_omega == Approx(static_cast<double>(std::sqrt(var))).epsilon(1e-12));
    CHECK(s.mu_omega == Approx(static_cast<double>(mean)).epsilon(1e-12));
}

TEST_CASE("invalid grids", "[dataset]") {
    CHECK_THROWS_AS(standardize(Vector::Constant(1, 1.0)), InvalidGrid);
    Vector neg(3);
    neg << -1.0, 1.0, 2.0;
    CHECK_THROWS_AS(standardize(neg), InvalidGrid);
    Vector dup(3);
    dup << 1.0, 1.0, 2.0;
    CHECK_THROWS_AS(standardize(dup), InvalidGrid);
}

TEST_CASE("noise-free generation equals the model", "[dataset]") {
    const EcmParams p = two_pair();
    NoiseSpec noise;
    noise.log_sigma2 = -std::numeric_limits<double>::infinity();
    const Dataset d = generate(p, 60, 7.0, noise, 1);
    const Impedance z = impedance(p, d.grid);
    CHECK(d.y_re == z.re);
    CHECK(d.y_im == z.im);
}

TEST_CASE("generation is deterministic under the seed", "[dataset]") {
    const EcmParams p = two_pair();
    const Dataset a = generate(p, 80, 7.0, {-4.0}, 17);
    const Dataset b = generate(p, 80, 7.0, {-4.0}, 17);
    const Dataset c = generate(p, 80, 7.0, {-4.0}, 18);
    CHECK(a.y_re == b.y_re);
    CHECK(a.y_im == b.y_im);
    CHECK(a.y_re != c.y_re);
    REQUIRE(a.meta.true_model);
    CHECK(*a.meta.true_model == 2);
    CHECK(*a.meta.log_sigma2 == -4.0);
}

TEST_CASE("residual variance matches the noise level", "[dataset]") {
    const EcmParams p = two_pair();
    const double ls2 = -5.0;
    const Dataset d = generate(p, 200, 7.0, {ls2}, 4);
    const Impedance z = impedance(p, d.grid);
    Vector r(400);
    r << d.y_re - z.re, d.y_im - z.im;
    const double var = r.squaredNorm() / 400.0;
    CHECK(var == Approx(std::exp(ls2)).epsilon(0.15));
}

TEST_CASE("channel noise is uncorrelated", "[dataset][property]") {
    const EcmParams p = two_pair();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset d = generate(p, 1000, 7.0, {-3.0}, seed);
        const Impedance z = impedance(p, d.grid);
        const Vector a = d.y_re - z.re, b = d.y_im - z.im;
        const double ma = a.mean(), mb = b.mean();
        const double cov = ((a.array() - ma) * (b.array() - mb)).mean();
        const double rho = cov / std::sqrt((a.array() - ma).square().mean() * (b.array() - mb).square().mean());
        CHECK(std::abs(rho) < 0.1);
    }
}

TEST_CASE("save and load round trip", "[dataset]") {
    const fs::path dir = scratch_dir("roundtrip");
    const Dataset d = generate(two_pair(), 37, 6.0, {-2.5}, 99);
    save_dataset(d, dir / "d.json");
    const Dataset e = load_dataset(dir / "d.json");
    CHECK(e.freqs_hz == d.freqs_hz);
    CHECK(e.y_re == d.y_re);
    CHECK(e.y_im == d.y_im);
    CHECK(*e.meta.theta == *d.meta.theta);
    CHECK(*e.meta.seed == 99u);
    CHECK(e.grid.sigma_omega == d.grid.sigma_omega);
    export_csv(d, dir / "d.csv");
    std::ifstream in(dir / "d.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "freq_hz,y_re,y_im");
}

TEST_CASE("schema errors name the field and extra keys are ignored", "[dataset]") {
    const fs::path dir = scratch_dir("schema");
    {
        std::ofstream out(dir / "missing.json");
        out << R"({"freqs_hz": [1, 2, 3], "y_re": [1, 2, 3]})";
    }
    try {
        load_dataset(dir / "missing.json");
        FAIL("expected a schema error");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("y_im") != std::string::npos);
    }
    {
        std::ofstream out(dir / "extra.json");
        out << R"({"freqs_hz": [1, 2, 3], "y_re": [1, 2, 3], "y_im": [0, 0, 0], "instrument": "x",
                  "meta": {"true_model": null, "theta": null, "log_sigma2": null, "seed": null, "note": 1}})";
    }
    const Dataset d = load_dataset(dir / "extra.json");
    CHECK(d.m() == 3);
    CHECK_FALSE(d.meta.true_params());
}
