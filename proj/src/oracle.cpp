#include "ecmbq/oracle.hpp"

#include "ecmbq/optimize.hpp"

namespace ecmbq {

Matrix numerical_hessian(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
    const Eigen::Index d = x.size();
    Matrix H(d, d);
    const double f0 = f(x);
    for (Eigen::Index i = 0; i < d; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        H(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
        for (Eigen::Index j = 0; j < i; ++j) {
            Vector a = x, b = x, c = x, e = x;
            a[i] += h, a[j] += h;
            b[i] += h, b[j] -= h;
            c[i] -= h, c[j] += h;
            e[i] -= h, e[j] -= h;
            H(i, j) = H(j, i) = (f(a) - f(b) - f(c) + f(e)) / (4.0 * h * h);
        }
    }
    return H;
}

namespace {

// Hessian with per-coordinate steps, rescaled to unit steps so one routine serves all scales.
Matrix scaled_hessian(const std::function<double(const Vector&)>& f, const Vector& x, const Vector& step) {
    auto g = [&](const Vector& u) { return f(x + step.cwiseProduct(u)); };
    const Matrix Hu = numerical_hessian(g, Vector::Zero(x.size()), 1.0);
    return step.cwiseInverse().asDiagonal() * Hu * step.cwiseInverse().asDiagonal();
}

// Covariance from the negative Hessian of the log posterior, eigenvalues floored to stay definite.
Matrix laplace_cov(const Matrix& H, double prior_var_cap) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(-0.5 * (H + H.transpose()));
    Vector lam = eig.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = std::max(lam[i], 1.0 / prior_var_cap);
    return eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::vector<OracleMode> find_modes(const LogLikelihoodFn& loglik, const GaussianPrior& prior, const OracleConfig& cfg) {
    const int d = prior.dim();
    auto log_post = [&](const Vector& x) { return loglik(x) + prior.log_pdf(x); };
    auto neg = [&](const Vector& x) { return -log_post(x); };
    const double prior_var_cap = prior.cov().diagonal().maxCoeff();

    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    Matrix starts(cfg.n_starts + 1, d);
    starts.row(0) = prior.mean().transpose();
    if (cfg.n_starts > 0) starts.bottomRows(cfg.n_starts) = prior.sample(cfg.n_starts, rng);

    std::vector<OracleMode> found;
    for (Eigen::Index s = 0; s < starts.rows(); ++s) {
        Vector x = starts.row(s).transpose();
        double step = 0.5;
        for (int round = 0; round < 6; ++round) {
            const OptimResult r = minimize_nelder_mead(neg, x, Vector::Constant(d, step), 4000, 1e-12);
            x = r.x;
            step *= 0.2;
        }
        // Damped Newton polish on the numerical Hessian; steps are only accepted when they improve.
        Vector scale = Vector::Constant(d, 1e-4);
        for (int it = 0; it < 8; ++it) {
            const Matrix H = scaled_hessian(log_post, x, scale);
            const Matrix cov = laplace_cov(H, prior_var_cap);
            scale = (0.05 * cov.diagonal().cwiseSqrt()).cwiseMax(1e-9);
            Vector g(d);
            for (int i = 0; i < d; ++i) {
                Vector xp = x, xm = x;
                xp[i] += scale[i];
                xm[i] -= scale[i];
                g[i] = (log_post(xp) - log_post(xm)) / (2.0 * scale[i]);
            }
            const Vector dx = cov * g;
            const double f0 = log_post(x);
            bool moved = false;
            for (double t = 1.0; t > 1e-4; t *= 0.5) {
                const Vector xn = x + t * dx;
                if (log_post(xn) > f0) {
                    x = xn;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
        OracleMode m;
        m.location = x;
        m.log_post = log_post(x);
        const Matrix H = scaled_hessian(log_post, x, scale);
        m.cov = laplace_cov(H, prior_var_cap);
        const double logdet = 2.0 * Eigen::LLT<Matrix>(m.cov).matrixL().toDenseMatrix().diagonal().array().log().sum();
        m.laplace_log_evidence = m.log_post + 0.5 * d * kLn2Pi + 0.5 * logdet;
        found.push_back(std::move(m));
    }
    std::sort(found.begin(), found.end(), [](const OracleMode& a, const OracleMode& b) { return a.log_post > b.log_post; });

    std::vector<OracleMode> modes;
    for (auto& m : found) {
        if (!modes.empty() && m.log_post < modes.front().log_post - 30.0) break;
        bool dup = false;
        for (const auto& k : modes) {
            const Vector diff = m.location - k.location;
            const double mahal = diff.dot(k.cov.ldlt().solve(diff));
            if (mahal < 25.0 * d) dup = true;
        }
        if (!dup) modes.push_back(std::move(m));
        if (static_cast<int>(modes.size()) >= cfg.max_modes) break;
    }
    return modes;
}

OracleResult oracle_evidence(const LogLikelihoodFn& loglik, const GaussianPrior& prior, const OracleConfig& cfg) {
    OracleResult res;
    res.modes = find_modes(loglik, prior, cfg);
    const int d = prior.dim();
    const double nu = cfg.t_dof;

    const std::size_t K = res.modes.size();
    std::vector<Matrix> chol(K);
    std::vector<double> log_norm(K);
    Vector log_mix(static_cast<Eigen::Index>(K) + 1);
    Vector lap(static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) lap[static_cast<Eigen::Index>(k)] = res.modes[k].laplace_log_evidence;
    const double lap_lse = log_sum_exp(lap);
    for (std::size_t k = 0; k < K; ++k) {
        const Matrix S = res.modes[k].cov * cfg.scale_inflation * cfg.scale_inflation;
        chol[k] = S.llt().matrixL();
        const double logdet = 2.0 * chol[k].diagonal().array().log().sum();
        log_norm[k] = std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) - 0.5 * d * std::log(nu * kPi) - 0.5 * logdet;
        log_mix[static_cast<Eigen::Index>(k)] = std::log(1.0 - cfg.prior_fraction) + lap[static_cast<Eigen::Index>(k)] - lap_lse;
    }
    log_mix[static_cast<Eigen::Index>(K)] = std::log(cfg.prior_fraction);

    auto log_q = [&](const Vector& x) {
        Vector terms(static_cast<Eigen::Index>(K) + 1);
        for (std::size_t k = 0; k < K; ++k) {
            const Vector z = chol[k].triangularView<Eigen::Lower>().solve(x - res.modes[k].location);
            terms[static_cast<Eigen::Index>(k)] =
                log_mix[static_cast<Eigen::Index>(k)] + log_norm[k] - 0.5 * (nu + d) * std::log1p(z.squaredNorm() / nu);
        }
        terms[static_cast<Eigen::Index>(K)] = log_mix[static_cast<Eigen::Index>(K)] + prior.log_pdf(x);
        return log_sum_exp(terms);
    };

    Rng rng(cfg.seed);
    std::vector<double> mix_w(K + 1);
    for (std::size_t k = 0; k <= K; ++k) mix_w[k] = std::exp(log_mix[static_cast<Eigen::Index>(k)]);
    std::discrete_distribution<std::size_t> pick(mix_w.begin(), mix_w.end());
    std::chi_squared_distribution<double> chi2(nu);

    Vector log_w(cfg.n_samples);
    Vector x(d);
    for (Eigen::Index i = 0; i < cfg.n_samples; ++i) {
        const std::size_t k = pick(rng);
        if (k == K) {
            x = prior.mean() + prior.chol() * standard_normal(d, rng);
        } else {
            const double scale = std::sqrt(nu / chi2(rng));
            x = res.modes[k].location + scale * (chol[k] * standard_normal(d, rng));
        }
        log_w[i] = loglik(x) + prior.log_pdf(x) - log_q(x);
    }
    const double lse = log_sum_exp(log_w);
    const double n = static_cast<double>(cfg.n_samples);
    res.log_evidence = lse - std::log(n);
    res.ess = effective_sample_size(log_w);
    // Relative standard error of the mean weight, which is the standard error on the log scale.
    const Eigen::ArrayXd w = (log_w.array() - lse).exp() * n;
    res.std_error = std::sqrt((w - 1.0).square().sum() / (n - 1.0) / n);
    return res;
}

}  // namespace ecmbq
