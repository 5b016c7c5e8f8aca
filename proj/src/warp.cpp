#include "ecmbq/warp.hpp"

#include "ecmbq/errors.hpp"

namespace ecmbq {

std::string WarpConfig::label() const {
    std::string s;
    auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!s.empty()) s += "+";
        s += name;
    };
    add(log_layer, "log");
    add(sqrt_layer, "sqrt");
    add(scaling, "scaling");
    return s.empty() ? "none" : s;
}

std::array<WarpConfig, 6> WarpConfig::ablation_set() {
    return {{
        {true, false, false},
        {false, true, false},
        {false, false, true},
        {true, false, true},
        {false, true, true},
        {true, true, true},
    }};
}

namespace {

Vector to_f(const Vector& y, double beta, bool scaling) {
    Vector f(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        f[i] = std::exp(y[i] - beta);
        if (!std::isfinite(f[i])) {
            throw NumericOverflow("exp(" + std::to_string(y[i]) + ") is not representable" +
                                  (scaling ? std::string() : std::string(" without the scaling layer")));
        }
    }
    return f;
}

}  // namespace

WarpConstants warp_constants(const Vector& log_liks, const WarpConfig& cfg) {
    WarpConstants c;
    if (log_liks.size() == 0) return c;
    if (cfg.scaling) c.beta = log_liks.maxCoeff();
    if (cfg.sqrt_layer) c.alpha = to_f(log_liks, c.beta, cfg.scaling).minCoeff();
    return c;
}

Vector warp_forward(const Vector& log_liks, const WarpConstants& c, const WarpConfig& cfg) {
    Vector v = to_f(log_liks, cfg.scaling ? c.beta : 0.0, cfg.scaling);
    if (cfg.sqrt_layer) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double rad = 2.0 * (v[i] - c.alpha);
            if (v[i] < c.alpha - 1e-15) {
                throw NegativeRadicand("f = " + std::to_string(v[i]) + " is below alpha = " + std::to_string(c.alpha));
            }
            v[i] = std::sqrt(std::max(rad, 0.0));
        }
    }
    if (cfg.log_layer) v = v.array().log1p().matrix();
    if (!v.allFinite()) throw NumericOverflow("warped targets are not finite");
    return v;
}

Vector warp_backward(const Vector& h, const WarpConstants& c, const WarpConfig& cfg) {
    Vector v = h;
    if (cfg.log_layer) v = v.array().expm1().matrix();
    if (cfg.sqrt_layer) v = (c.alpha + 0.5 * v.array().square()).matrix();
    return (v.array().log() + (cfg.scaling ? c.beta : 0.0)).matrix();
}

Moments lognormal_minus_one(const Vector& mu_h, const Matrix& cov_h) {
    const Vector mu_prime = (mu_h.array() + 0.5 * cov_h.diagonal().array()).exp().matrix();
    Moments m;
    m.mean = (mu_prime.array() - 1.0).matrix();
    m.cov = (mu_prime * mu_prime.transpose()).cwiseProduct(cov_h.array().expm1().matrix());
    return m;
}

Moments half_square(const Vector& mu_g, const Matrix& cov_g, double alpha) {
    Moments m;
    m.mean = (alpha + 0.5 * (mu_g.array().square() + cov_g.diagonal().array())).matrix();
    m.cov = 0.5 * cov_g.cwiseProduct(cov_g) + mu_g.asDiagonal() * cov_g * mu_g.asDiagonal();
    m.cov.diagonal() = m.cov.diagonal().cwiseMax(0.0);
    return m;
}

Moments WarpedSurrogate::moments_h(const Matrix& Q) const { return {base_.predict_mean(Q), base_.predict_cov(Q)}; }

Moments WarpedSurrogate::moments_g(const Matrix& Q) const {
    Moments h = moments_h(Q);
    return cfg_.log_layer ? lognormal_minus_one(h.mean, h.cov) : h;
}

Moments WarpedSurrogate::moments_f(const Matrix& Q) const {
    Moments g = moments_g(Q);
    return cfg_.sqrt_layer ? half_square(g.mean, g.cov, consts_.alpha) : g;
}

LogMoments WarpedSurrogate::moments_e_log(const Matrix& Q) const {
    const Moments f = moments_f(Q);
    const double beta = cfg_.scaling ? consts_.beta : 0.0;
    LogMoments out;
    out.log_mean = (f.mean.array().log() + beta).matrix();
    out.log_abs_cov = (f.cov.array().abs().log() + 2.0 * beta).matrix();
    out.cov_sign = f.cov.array().sign().matrix();
    return out;
}

void WarpedSurrogate::mean_var_g(const Matrix& Q, Vector& mean, Vector& var) const {
    mean = base_.predict_mean(Q);
    var = base_.predict_var(Q);
    if (!cfg_.log_layer) return;
    const Eigen::ArrayXd mu_prime = (mean.array() + 0.5 * var.array()).exp();
    mean = (mu_prime - 1.0).matrix();
    var = (mu_prime.square() * var.array().expm1()).matrix();
}

Vector WarpedSurrogate::mean_f(const Matrix& Q) const {
    Vector mean, var;
    mean_var_g(Q, mean, var);
    if (!cfg_.sqrt_layer) return mean;
    return (consts_.alpha + 0.5 * (mean.array().square() + var.array())).matrix();
}

Matrix WarpedSurrogate::cov_g(const Matrix& A, const Matrix& B) const {
    Matrix Va, Vb;
    Vector ma, va, mb, vb;
    base_.predict_parts(A, Va, ma, va);
    const bool same = &A == &B;
    if (!same) base_.predict_parts(B, Vb, mb, vb);
    Matrix c = base_.kernel().matrix(A, B);
    if (base_.n() > 0) c.noalias() -= Va.transpose() * (same ? Va : Vb);
    if (!cfg_.log_layer) return c;
    const Vector pa = (ma.array() + 0.5 * va.array()).exp().matrix();
    const Vector pb = same ? pa : (mb.array() + 0.5 * vb.array()).exp().matrix().eval();
    return (pa * pb.transpose()).cwiseProduct(c.array().expm1().matrix());
}

}  // namespace ecmbq
