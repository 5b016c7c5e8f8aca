#include "ecmbq/bayes.hpp"

#include "ecmbq/errors.hpp"

namespace ecmbq {

Vector Theta::to_vector() const {
    const Vector e = ecm.to_vector();
    Vector v(e.size() + 1);
    v.head(e.size()) = e;
    v[e.size()] = log_sigma2;
    return v;
}

Theta Theta::from_vector(const Vector& v, int n_pairs) {
    Theta t;
    t.ecm = EcmParams::from_vector(v, n_pairs);
    t.log_sigma2 = v[theta_dim(n_pairs) - 1];
    return t;
}

Vector residual_terms(const Vector& theta, const Dataset& data, int n_pairs, LikelihoodMode mode) {
    if (theta.size() != theta_dim(n_pairs)) {
        throw ConfigError("theta has dimension " + std::to_string(theta.size()) + ", model with " +
                          std::to_string(n_pairs) + " pairs needs " + std::to_string(theta_dim(n_pairs)));
    }
    const Impedance z = impedance(EcmParams::from_vector(theta, n_pairs), data.grid);
    const Eigen::Index m = data.m();
    Vector r(2 * m);
    r.head(m) = data.y_re - z.re;
    r.tail(m) = data.y_im - z.im;
    if (mode == LikelihoodMode::LiteralSquared) r = r.array().square().matrix();
    return r;
}

double log_likelihood(const Vector& theta, const Dataset& data, int n_pairs, LikelihoodMode mode) {
    Vector r;
    try {
        r = residual_terms(theta, data, n_pairs, mode);
    } catch (const DegenerateParams&) {
        return kLogLikFloor;
    }
    const double log_s2 = theta[theta.size() - 1];
    if (!std::isfinite(log_s2)) return kLogLikFloor;
    const double n = static_cast<double>(r.size());
    const double ll = -0.5 * n * (kLn2Pi + log_s2) - 0.5 * r.squaredNorm() * std::exp(-log_s2);
    return std::isfinite(ll) ? std::max(ll, kLogLikFloor) : kLogLikFloor;
}

LogLikelihoodFn ecm_log_likelihood(std::shared_ptr<const Dataset> data, int n_pairs, LikelihoodMode mode) {
    return [data = std::move(data), n_pairs, mode](const Vector& theta) {
        return log_likelihood(theta, *data, n_pairs, mode);
    };
}

GaussianPrior::GaussianPrior(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
        throw NonPsdCovariance("covariance shape does not match mean length");
    }
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw NonPsdCovariance("covariance is not symmetric");
    }
    Eigen::LLT<Matrix> llt(cov_);
    if (llt.info() != Eigen::Success) throw NonPsdCovariance("covariance is not positive definite");
    chol_ = llt.matrixL();
    log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

GaussianPrior GaussianPrior::isotropic(int dim, double mean, double stddev) {
    return GaussianPrior(Vector::Constant(dim, mean), Matrix::Identity(dim, dim) * stddev * stddev);
}

GaussianPrior GaussianPrior::from_json(const json& j) {
    Vector mean = vector_from_json(require_field(j, "mean"), "mean");
    Matrix cov;
    if (j.contains("cov")) {
        cov = matrix_from_json(j["cov"], "cov");
    } else if (j.contains("cov_diag")) {
        cov = vector_from_json(j["cov_diag"], "cov_diag").asDiagonal();
    } else {
        throw SchemaError("missing field 'cov_diag' (or 'cov')");
    }
    if (cov.rows() != mean.size()) throw SchemaError("prior covariance size does not match 'mean'");
    return GaussianPrior(std::move(mean), std::move(cov));
}

json GaussianPrior::to_json() const {
    json j;
    j["mean"] = ecmbq::to_json(mean_);
    j["cov"] = ecmbq::to_json(cov_);
    return j;
}

double GaussianPrior::log_pdf(const Vector& x) const {
    const Vector z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
    return -0.5 * (static_cast<double>(dim()) * kLn2Pi + log_det_ + z.squaredNorm());
}

Matrix GaussianPrior::sample(Eigen::Index n, Rng& rng) const {
    Matrix out(n, dim());
    for (Eigen::Index i = 0; i < n; ++i) {
        out.row(i) = (mean_ + chol_ * standard_normal(dim(), rng)).transpose();
    }
    return out;
}

Matrix GaussianPrior::sample(Eigen::Index n, std::uint64_t seed) const {
    Rng rng(seed);
    return sample(n, rng);
}

double log_posterior_unnorm(const Vector& theta, const Dataset& data, const GaussianPrior& prior, int n_pairs,
                            LikelihoodMode mode) {
    return log_likelihood(theta, data, n_pairs, mode) + prior.log_pdf(theta);
}

}  // namespace ecmbq
