#include "ecmbq/gp.hpp"

#include "ecmbq/errors.hpp"
#include "ecmbq/optimize.hpp"

namespace ecmbq {

bool Kernel::valid() const {
    return std::isfinite(output_scale) && output_scale > 0.0 && lengthscales.size() > 0 &&
           (lengthscales.array() > 0.0).all() && lengthscales.allFinite();
}

double Kernel::operator()(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const {
    return output_scale * std::exp(-0.5 * ((a - b).array() / lengthscales.array()).square().sum());
}

Matrix Kernel::matrix(const Matrix& A, const Matrix& B) const {
    const Eigen::ArrayXd inv = lengthscales.array().inverse();
    const Matrix As = A * inv.matrix().asDiagonal();
    const Matrix Bs = B * inv.matrix().asDiagonal();
    const Vector na = As.rowwise().squaredNorm();
    const Vector nb = Bs.rowwise().squaredNorm();
    Matrix D = -2.0 * As * Bs.transpose();
    D.colwise() += na;
    D.rowwise() += nb.transpose();
    return (output_scale * (-0.5 * D.array().max(0.0)).exp()).matrix();
}

GpState::GpState(Kernel kernel, Matrix inputs, Vector targets, double min_rel_jitter)
    : kernel_(std::move(kernel)), inputs_(std::move(inputs)), targets_(std::move(targets)) {
    if (!kernel_.valid()) throw ConfigError("kernel hyperparameters must be positive and finite");
    if (inputs_.rows() != targets_.size()) throw ConfigError("GP inputs and targets differ in length");
    if (inputs_.rows() > 0 && inputs_.cols() != kernel_.dim()) {
        throw ConfigError("GP input dimension does not match the kernel");
    }
    if (n() == 0) return;
    const Matrix K = kernel_.matrix(inputs_, inputs_);
    const double s = kernel_.output_scale;
    for (double rel = min_rel_jitter; rel <= 1e-4 * (1.0 + 1e-9); rel *= 10.0) {
        Matrix Kj = K;
        Kj.diagonal().array() += rel * s;
        Eigen::LLT<Matrix> llt(Kj);
        if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) {
            jitter_ = rel * s;
            chol_ = llt.matrixL();
            alpha_ = llt.solve(targets_);
            if (alpha_.allFinite()) return;
        }
    }
    throw CholeskyFailure("kernel matrix not positive definite with jitter up to 1e-4 * output_scale (n = " +
                          std::to_string(n()) + ")");
}

Matrix GpState::whitened_cross(const Matrix& Q) const {
    return chol_.triangularView<Eigen::Lower>().solve(kernel_.matrix(inputs_, Q));
}

void GpState::predict_parts(const Matrix& Q, Matrix& V, Vector& mean, Vector& var) const {
    if (n() == 0) {
        V.resize(0, Q.rows());
        mean = Vector::Zero(Q.rows());
        var = Vector::Constant(Q.rows(), kernel_.output_scale);
        return;
    }
    const Matrix Kxq = kernel_.matrix(inputs_, Q);
    mean = Kxq.transpose() * alpha_;
    V = chol_.triangularView<Eigen::Lower>().solve(Kxq);
    var = (Vector::Constant(Q.rows(), kernel_.output_scale) - V.colwise().squaredNorm().transpose()).cwiseMax(0.0);
}

Vector GpState::predict_mean(const Matrix& Q) const {
    if (n() == 0) return Vector::Zero(Q.rows());
    return kernel_.matrix(Q, inputs_) * alpha_;
}

Matrix GpState::predict_cov(const Matrix& A, const Matrix& B) const {
    Matrix C = kernel_.matrix(A, B);
    if (n() == 0) return C;
    C.noalias() -= whitened_cross(A).transpose() * whitened_cross(B);
    return C;
}

Matrix GpState::predict_cov(const Matrix& Q) const {
    Matrix C = kernel_.matrix(Q, Q);
    if (n() > 0) {
        const Matrix V = whitened_cross(Q);
        C.noalias() -= V.transpose() * V;
    }
    C = 0.5 * (C + C.transpose());
    C.diagonal() = C.diagonal().cwiseMax(0.0);
    return C;
}

Vector GpState::predict_var(const Matrix& Q) const {
    Vector v = Vector::Constant(Q.rows(), kernel_.output_scale);
    if (n() > 0) v -= whitened_cross(Q).colwise().squaredNorm().transpose();
    return v.cwiseMax(0.0);
}

double log_marginal_likelihood(const Kernel& kernel, const Matrix& X, const Vector& y, double rel_nugget,
                               Vector* grad) {
    const Eigen::Index n = X.rows();
    const int d = kernel.dim();
    const Matrix Kf = kernel.matrix(X, X);
    Matrix K = Kf;
    K.diagonal().array() += rel_nugget * kernel.output_scale;
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) {
        if (grad) grad->setZero(d + 1);
        return -1e300;
    }
    const Vector alpha = llt.solve(y);
    const Matrix L = llt.matrixL();
    const double lml = -0.5 * y.dot(alpha) - L.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLn2Pi;
    if (grad) {
        const Matrix Kinv = llt.solve(Matrix::Identity(n, n));
        const Matrix A = alpha * alpha.transpose() - Kinv;
        grad->resize(d + 1);
        // The nugget scales with s, so dK/d ln s = K.
        (*grad)[0] = 0.5 * (A.array() * K.array()).sum();
        // sum_ij B_ij (x_i - x_j)^2 = 2 x^2 . rowsum(B) - 2 x'Bx for symmetric B.
        const Matrix B = A.cwiseProduct(Kf);
        const Vector rows = B.rowwise().sum();
        for (int k = 0; k < d; ++k) {
            const Vector xk = X.col(k) / kernel.lengthscales[k];
            (*grad)[k + 1] = xk.cwiseAbs2().dot(rows) - xk.dot(B * xk);
        }
    }
    return lml;
}

namespace {

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double p) {
    p = std::clamp(p, 1e-9, 1.0 - 1e-9);
    return std::log(p / (1.0 - p));
}

// Box-bounded log-hyperparameters [ln s, ln l_1..l_d] reached through a sigmoid.
struct BoundedLogParams {
    Vector lo;
    Vector hi;

    Vector to_log(const Vector& u) const {
        Vector p(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) p[i] = lo[i] + (hi[i] - lo[i]) * sigmoid(u[i]);
        return p;
    }
    Vector jacobian(const Vector& u) const {
        Vector j(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const double s = sigmoid(u[i]);
            j[i] = (hi[i] - lo[i]) * s * (1.0 - s);
        }
        return j;
    }
    Vector from_log(const Vector& p) const {
        Vector u(p.size());
        for (Eigen::Index i = 0; i < p.size(); ++i) u[i] = logit((p[i] - lo[i]) / (hi[i] - lo[i]));
        return u;
    }
};

Kernel kernel_from_log(const Vector& p) {
    Kernel k;
    k.output_scale = std::exp(p[0]);
    k.lengthscales = p.tail(p.size() - 1).array().exp().matrix();
    return k;
}

Vector log_from_kernel(const Kernel& k) {
    Vector p(k.dim() + 1);
    p[0] = std::log(k.output_scale);
    p.tail(k.dim()) = k.lengthscales.array().log().matrix();
    return p;
}

}  // namespace

Kernel fit_hyperparams(const Matrix& X, const Vector& y, const HyperFitOptions& opts) {
    const Eigen::Index n = X.rows();
    const int d = static_cast<int>(X.cols());
    if (n < 2) throw ConfigError("fit_hyperparams needs at least two points");

    Vector spread(d);
    for (int k = 0; k < d; ++k) {
        const double mean = X.col(k).mean();
        const double sd = std::sqrt((X.col(k).array() - mean).square().mean());
        spread[k] = sd > 1e-12 ? sd : 1.0;
    }
    if (opts.reference_spread && opts.reference_spread->size() == d) {
        for (int k = 0; k < d; ++k) {
            const double r = (*opts.reference_spread)[k];
            if (r > 1e-12 && std::isfinite(r)) spread[k] = r;
        }
    }
    BoundedLogParams bounds;
    bounds.lo.resize(d + 1);
    bounds.hi.resize(d + 1);
    bounds.lo[0] = std::log(opts.min_output_scale);
    bounds.hi[0] = std::log(opts.max_output_scale);
    for (int k = 0; k < d; ++k) {
        bounds.lo[k + 1] = std::log(opts.min_rel_lengthscale * spread[k]);
        bounds.hi[k + 1] = std::log(opts.max_rel_lengthscale * spread[k]);
    }

    const ObjectiveWithGradient objective = [&](const Vector& u, Vector& g) {
        const Vector p = bounds.to_log(u);
        Vector gp;
        double lml = log_marginal_likelihood(kernel_from_log(p), X, y, opts.rel_nugget, &gp);
        if (opts.log_lengthscale_prior_sd > 0.0) {
            const double v = opts.log_lengthscale_prior_sd * opts.log_lengthscale_prior_sd;
            for (int k = 0; k < d; ++k) {
                const double z = p[k + 1] - std::log(spread[k]);
                lml -= 0.5 * z * z / v;
                gp[k + 1] -= z / v;
            }
        }
        g = -(gp.array() * bounds.jacobian(u).array()).matrix();
        return -lml;
    };

    std::vector<Vector> starts;
    if (opts.warm_start && opts.warm_start->dim() == d && opts.warm_start->valid()) {
        starts.push_back(bounds.from_log(log_from_kernel(*opts.warm_start)));
    }
    const double var_y = std::max((y.array() - y.mean()).square().mean() + y.mean() * y.mean(), 1e-12);
    Vector p0(d + 1);
    p0[0] = std::log(var_y);
    p0.tail(d) = spread.array().log().matrix();
    starts.push_back(bounds.from_log(p0));
    Rng rng(opts.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int r = 0; r < opts.restarts; ++r) {
        Vector p = p0;
        p[0] += 2.0 * unif(rng);
        for (int k = 0; k < d; ++k) p[k + 1] += 1.5 * unif(rng);
        starts.push_back(bounds.from_log(p));
    }

    Vector best_u = starts.front();
    double best = std::numeric_limits<double>::infinity();
    for (const Vector& u0 : starts) {
        const OptimResult res = minimize_bfgs(objective, u0, opts.max_iters, 1e-5, 0.5);
        if (res.value < best) {
            best = res.value;
            best_u = res.x;
        }
    }
    return kernel_from_log(bounds.to_log(best_u));
}

}  // namespace ecmbq
