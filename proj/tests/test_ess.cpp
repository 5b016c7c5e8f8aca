#include <catch2/catch_amalgamated.hpp>

#include "ecmbq/ess.hpp"

#include "oracles.hpp"

#include <algorithm>

using namespace ecmbq;
using Catch::Approx;

namespace {

double ks_normal(std::vector<double> x, double sd) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = 0.5 * std::erfc(-x[i] / (sd * std::sqrt(2.0)));
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

oracle::Conjugate conjugate() {
    oracle::Conjugate c;
    c.centre.resize(2);
    c.centre << 0.5, -0.3;
    return c;
}

// Batch-means standard error of a chain average.
double batch_se(const Vector& v, int batches = 50) {
    const Eigen::Index len = v.size() / batches;
    Vector means(batches);
    for (int b = 0; b < batches; ++b) means[b] = v.segment(b * len, len).mean();
    const double m = means.mean();
    return std::sqrt((means.array() - m).square().sum() / (batches - 1) / batches);
}

}  // namespace

TEST_CASE("flat likelihood samples the prior", "[ess][property]") {
    const GaussianPrior prior = GaussianPrior::isotropic(3);
    EssConfig cfg;
    cfg.n_steps = 11112;
    cfg.seed = 1;
    const EssChain ch = run_ess([](const Vector&) { return 0.0; }, prior, cfg);
    REQUIRE(ch.samples.rows() >= 10000);
    for (int k = 0; k < 3; ++k) {
        std::vector<double> col(ch.samples.col(k).data(), ch.samples.col(k).data() + ch.samples.rows());
        CHECK(ks_normal(col, 2.0) < 0.05);
    }
    CHECK(ch.abandoned_steps == 0);
}

TEST_CASE("conjugate posterior mean", "[ess][oracle]") {
    const oracle::Conjugate c = conjugate();
    EssConfig cfg;
    cfg.n_steps = 20000;
    cfg.seed = 2;
    const EssChain ch = run_ess(c.loglik(), GaussianPrior::isotropic(2), cfg);
    const double post_var = 1.0 / (0.25 + 1.0 / (c.sd * c.sd));
    for (int k = 0; k < 2; ++k) {
        const Vector col = ch.samples.col(k);
        const double truth = c.centre[k] * post_var / (c.sd * c.sd);
        CHECK(std::abs(col.mean() - truth) <= 3.0 * batch_se(col));
    }
    CHECK(ch.max_shrinks < 100);
    CHECK(ch.n_evals >= cfg.n_steps);
    CHECK(ch.samples.rows() == cfg.n_steps - cfg.n_steps / 10);
}

TEST_CASE("seeded chains are identical", "[ess]") {
    const oracle::Conjugate c = conjugate();
    EssConfig cfg;
    cfg.n_steps = 500;
    cfg.seed = 3;
    const EssChain a = run_ess(c.loglik(), GaussianPrior::isotropic(2), cfg);
    const EssChain b = run_ess(c.loglik(), GaussianPrior::isotropic(2), cfg);
    CHECK(a.samples == b.samples);
    CHECK(a.n_evals == b.n_evals);
}

TEST_CASE("evaluation budget is respected", "[ess]") {
    const oracle::Conjugate c = conjugate();
    EssConfig cfg;
    cfg.n_steps = 100000;
    cfg.max_evals = 1500;
    cfg.seed = 4;
    const EssChain ch = run_ess(c.loglik(), GaussianPrior::isotropic(2), cfg);
    CHECK(ch.n_evals <= cfg.max_evals + cfg.max_shrink + 1);
    CHECK(ch.samples.rows() > 0);
    for (std::size_t i = 1; i < ch.evals_at.size(); ++i) CHECK(ch.evals_at[i] > ch.evals_at[i - 1]);
}

TEST_CASE("ELPD checkpoints", "[ess]") {
    const oracle::Conjugate c = conjugate();
    EssConfig cfg;
    cfg.n_steps = 4000;
    cfg.seed = 5;
    const EssChain ch = run_ess(c.loglik(), GaussianPrior::isotropic(2), cfg);
    // one observation per coordinate
    const PointwiseLogLik pw = [&](const Vector& x) {
        Vector v(2);
        for (int k = 0; k < 2; ++k) v[k] = log_normal_pdf(x[k], c.centre[k], c.sd * c.sd);
        return v;
    };
    const long at = ch.evals_at[100];
    const auto single = elpd_checkpoints(ch, pw, {at});
    REQUIRE(single.size() == 1);
    CHECK(single[0].n_samples == 101);
    CHECK(single[0].value == Approx(elpd(ch.samples.topRows(101), Vector(), pw)).epsilon(1e-12));

    const auto rows = elpd_checkpoints(ch, pw, {ch.n_evals, 1, ch.evals_at[10], ch.evals_at[1000]});
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].n_evals > rows[i - 1].n_evals);
    // in-sample predictive density dominates the evidence of the same data
    CHECK(rows.back().value > c.log_evidence());

    const std::string csv = curve_csv(rows);
    CHECK(csv.rfind("iter,n_evals,wall_time_s,lem,lev\n", 0) == 0);
}
