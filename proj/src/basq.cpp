#include "ecmbq/basq.hpp"

#include "ecmbq/errors.hpp"

#include <chrono>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace ecmbq {

json BasqConfig::to_json() const {
    return json{{"batch_size", batch_size},
                {"max_iters", max_iters},
                {"conv_tol", conv_tol},
                {"plateau_window", plateau_window},
                {"seed", seed},
                {"n_super", n_super},
                {"n_gp_max", n_gp_max},
                {"n_fit_max", n_fit_max},
                {"hyper_restarts", hyper_restarts},
                {"uncertainty_ratio", uncertainty_ratio},
                {"top_points", proposal.top_points},
                {"max_components", proposal.max_components},
                {"warp", {{"log", warp.log_layer}, {"sqrt", warp.sqrt_layer}, {"scaling", warp.scaling}}},
                {"kernel", "squared-exponential ARD"},
                {"jitter", "1e-8 * output_scale, x10 up to 1e-4 * output_scale"},
                {"hyper_optimizer", "bfgs2 on bounded log-hyperparameters"}};
}

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

BasqConfig BasqConfig::from_json(const json& j) { return from_json(j, BasqConfig{}); }

BasqConfig BasqConfig::from_json(const json& j, BasqConfig c) {
    if (!j.is_object()) throw ConfigError("BASQ configuration must be a JSON object");
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "max_iters", c.max_iters);
    read_opt(j, "conv_tol", c.conv_tol);
    read_opt(j, "plateau_window", c.plateau_window);
    read_opt(j, "seed", c.seed);
    read_opt(j, "n_super", c.n_super);
    read_opt(j, "n_gp_max", c.n_gp_max);
    read_opt(j, "n_fit_max", c.n_fit_max);
    read_opt(j, "hyper_restarts", c.hyper_restarts);
    read_opt(j, "uncertainty_ratio", c.uncertainty_ratio);
    if (!(c.uncertainty_ratio >= 0.0 && c.uncertainty_ratio <= 1.0)) throw ConfigError("uncertainty_ratio must lie in [0, 1]");
    read_opt(j, "top_points", c.proposal.top_points);
    read_opt(j, "max_components", c.proposal.max_components);
    if (j.contains("warp")) {
        const json& w = j["warp"];
        read_opt(w, "log", c.warp.log_layer);
        read_opt(w, "sqrt", c.warp.sqrt_layer);
        read_opt(w, "scaling", c.warp.scaling);
    }
    if (c.batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (c.max_iters < 0) throw ConfigError("max_iters must be non-negative");
    if (!(c.conv_tol > 0.0)) throw ConfigError("conv_tol must be positive");
    if (c.plateau_window < 1) throw ConfigError("plateau_window must be at least 1");
    if (c.n_super < c.batch_size) throw ConfigError("n_super must be at least batch_size");
    if (c.n_gp_max < 2 || c.n_fit_max < 2) throw ConfigError("n_gp_max and n_fit_max must be at least 2");
    if (c.proposal.top_points < 2 || c.proposal.max_components < 1) throw ConfigError("invalid proposal caps");
    return c;
}

json EvidenceEstimate::to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : (v < 0 ? "-inf" : "nan")); };
    return json{{"lem", num(lem)},
                {"lev", num(lev)},
                {"lev_standardized", num(lev_standardized)},
                {"n_evals", n_evals},
                {"wall_time_s", wall_time_s},
                {"overflow", overflow},
                {"diagnostic", diagnostic}};
}

EvidenceEstimate evidence(const WarpedSurrogate& s, const QuadratureNodes& nodes) {
    EvidenceEstimate e;
    if (nodes.points.rows() == 0) {
        e.diagnostic = "no quadrature nodes";
        return e;
    }
    const Moments f = s.moments_f(nodes.points);
    const double beta = s.config().scaling ? s.consts().beta : 0.0;
    const double mean_sum = nodes.weights.dot(f.mean);
    const double var_sum = nodes.weights.dot(f.cov * nodes.weights);
    if (std::isinf(mean_sum) || std::isinf(var_sum) || !f.mean.allFinite() || !f.cov.allFinite()) {
        e.overflow = true;
        e.lem = e.lev = e.lev_standardized = std::numeric_limits<double>::infinity();
        e.diagnostic = "overflow";
        return e;
    }
    if (mean_sum > 0.0) {
        e.lem = std::log(mean_sum) + beta;
    } else {
        e.diagnostic = "non-positive evidence mean sum";
    }
    if (var_sum > 0.0) {
        e.lev = std::log(var_sum) + 2.0 * beta;
        e.lev_standardized = e.lev - 2.0 * beta;
    } else if (e.diagnostic.empty()) {
        e.diagnostic = "non-positive evidence variance sum";
    }
    return e;
}

namespace {

std::vector<Eigen::Index> order_desc(const Vector& y) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(y.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return y[a] > y[b]; });
    return idx;
}

Matrix take_rows(const Matrix& X, const std::vector<Eigen::Index>& idx, std::size_t n) {
    Matrix out(static_cast<Eigen::Index>(n), X.cols());
    for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
    return out;
}

Vector take(const Vector& v, const std::vector<Eigen::Index>& idx, std::size_t n) {
    Vector out(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
}

void append(Matrix& X, Vector& y, const Matrix& Xn, const Vector& yn) {
    const Eigen::Index n0 = X.rows();
    X.conservativeResize(n0 + Xn.rows(), Xn.cols());
    y.conservativeResize(n0 + yn.size());
    X.bottomRows(Xn.rows()) = Xn;
    y.tail(yn.size()) = yn;
}

Vector evaluate(const LogLikelihoodFn& loglik, const Matrix& X) {
    Vector y(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) y[i] = loglik(X.row(i).transpose());
    return y;
}

std::vector<Eigen::Index> choose_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<Eigen::Index> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < k && i < n; ++i) {
        std::uniform_int_distribution<std::size_t> u(i, n - 1);
        std::swap(all[i], all[u(rng)]);
    }
    all.resize(std::min(k, n));
    return all;
}

// Supersamples from the midpoint proposal; equal weights when the importance weights collapse.
struct Candidates {
    Supersample ss;
    bool degenerate = false;
};

Candidates draw_candidates(const ProposalMixture& q, const WarpedSurrogate& s, const GaussianPrior& prior,
                           Eigen::Index n_super, double ratio, Rng& rng) {
    Matrix pts = q.sample(n_super, rng);
    Vector log_q = q.log_pdf(pts);
    Vector log_target = midpoint_log_scores(s, prior, pts);
    if (ratio < 1.0) {
        // (1 - r) * posterior estimate mu_g^2 pi + r * uncertainty target, each normalised over the draws.
        Vector mu, var;
        s.mean_var_g(pts, mu, var);
        Vector log_post(pts.rows());
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            log_post[i] = mu[i] > 0.0 ? 2.0 * std::log(mu[i]) + prior.log_pdf(pts.row(i).transpose()) : kNegInf;
        }
        const double z_post = log_sum_exp(Vector(log_post - log_q));
        const double z_unc = log_sum_exp(Vector(log_target - log_q));
        if (std::isfinite(z_post) && std::isfinite(z_unc)) {
            for (Eigen::Index i = 0; i < pts.rows(); ++i) {
                log_target[i] = log_add(std::log1p(-ratio) + log_post[i] - z_post,
                                        ratio > 0.0 ? std::log(ratio) + log_target[i] - z_unc : kNegInf);
            }
        }
    }
    try {
        return {weigh_supersample(pts, log_q, log_target, rng), false};
    } catch (const DegenerateWeights&) {
        // Keep the proposal draws (the evidence weights only need q) but select the batch uniformly.
        return {weigh_supersample(std::move(pts), log_q, log_q, rng), true};
    }
}

Matrix select_batch(const Candidates& c, const WarpedSurrogate& s, int batch, Rng& rng, int& landmarks_used) {
    const Supersample& ss = c.ss;
    const auto n_unique = ss.resampled.size();
    Matrix cands = take_rows(ss.points, ss.resampled, n_unique);
    std::vector<Eigen::Index> chosen;
    if (n_unique <= static_cast<std::size_t>(batch)) {
        for (std::size_t i = 0; i < n_unique; ++i) chosen.push_back(ss.resampled[i]);
    } else {
        const auto lm = choose_without_replacement(n_unique, static_cast<std::size_t>(batch - 1), rng);
        landmarks_used = static_cast<int>(lm.size());
        const Matrix L = take_rows(cands, lm, lm.size());
        const Matrix phi = nystrom_features([&](const Matrix& A, const Matrix& B) { return s.cov_g(A, B); }, cands, L);
        const QuadratureNodes nodes = recombine(cands, phi, ss.counts);
        for (Eigen::Index k : nodes.indices) chosen.push_back(ss.resampled[static_cast<std::size_t>(k)]);
    }
    // Top up with the heaviest remaining supersamples so every iteration spends exactly one batch.
    if (chosen.size() < static_cast<std::size_t>(batch)) {
        std::set<Eigen::Index> used(chosen.begin(), chosen.end());
        for (Eigen::Index i : order_desc(ss.log_w)) {
            if (chosen.size() >= static_cast<std::size_t>(batch)) break;
            if (used.insert(i).second) chosen.push_back(i);
        }
    }
    chosen.resize(std::min(chosen.size(), static_cast<std::size_t>(batch)));
    return take_rows(ss.points, chosen, chosen.size());
}

struct EvidenceStep {
    EvidenceEstimate est;
    int nodes = 0;
};

EvidenceStep estimate_evidence(const Matrix& points, const Vector& log_q, const WarpedSurrogate& s,
                               const GaussianPrior& prior, int batch, Rng& rng) {
    const Eigen::Index n = points.rows();
    Vector log_w(n);
    for (Eigen::Index i = 0; i < n; ++i) log_w[i] = prior.log_pdf(points.row(i).transpose()) - log_q[i];
    log_w.array() -= std::log(static_cast<double>(n));
    // Truncated importance sampling: no single draw may carry more than sqrt(n) times the mean weight.
    const double log_cap = log_sum_exp(log_w) - 0.5 * std::log(static_cast<double>(n));
    log_w = log_w.cwiseMin(log_cap);
    // Renormalise to O(1) for the reduction and fold the scale back into the weights afterwards.
    const double shift = log_w.maxCoeff();
    const Vector w = (log_w.array() - shift).exp().matrix();

    const Vector mu_f = s.mean_f(points);
    const int n_landmarks = std::max(0, batch - 2);
    const auto lm = choose_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(n_landmarks), rng);
    Matrix phi_g = lm.empty() ? Matrix(n, 0)
                              : nystrom_features([&](const Matrix& A, const Matrix& B) { return s.cov_g(A, B); },
                                                 points, take_rows(points, lm, lm.size()));
    Matrix phi(n, 1 + phi_g.cols());
    phi.col(0) = (mu_f.array() - s.consts().alpha).matrix();
    phi.rightCols(phi_g.cols()) = phi_g;
    QuadratureNodes nodes = recombine(points, phi, w);
    nodes.weights *= std::exp(shift);
    EvidenceStep out;
    out.est = evidence(s, nodes);
    out.nodes = static_cast<int>(nodes.points.rows());
    return out;
}

// Batch candidates come from the same midpoints with component variance l/2, which reaches further
// than the half-lengthscale standard deviation used for the evidence supersample.
ProposalMixture exploration_proposal(ProposalMixture q, const Kernel& k) {
    q.stddev = (0.5 * k.lengthscales).cwiseSqrt();
    return q;
}

EvidenceStep evidence_step(const ProposalMixture& q, const WarpedSurrogate& s, const GaussianPrior& prior,
                           const BasqConfig& cfg, Rng& rng) {
    const Matrix pts = q.sample(cfg.n_super, rng);
    return estimate_evidence(pts, q.log_pdf(pts), s, prior, cfg.batch_size, rng);
}

bool plateaued(const RunHistory& h, int window, double tol) {
    const auto& s = h.snapshots;
    if (s.size() < static_cast<std::size_t>(window) + 1) return false;
    for (std::size_t k = s.size() - static_cast<std::size_t>(window); k < s.size(); ++k) {
        const double d = s[k].lev - s[k - 1].lev;
        if (!(std::abs(d) < tol)) return false;
    }
    return true;
}

}  // namespace

namespace {

// Half of the budget goes to the best points, the rest is spread evenly over the lower ranks so the
// surrogate also sees where the likelihood is negligible.
std::vector<Eigen::Index> top_and_strided(const std::vector<Eigen::Index>& order, std::size_t n) {
    if (order.size() <= n) return order;
    const std::size_t top = (n + 1) / 2;
    std::vector<Eigen::Index> out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top));
    const std::size_t rest = order.size() - top;
    const std::size_t want = n - top;
    for (std::size_t i = 0; i < want; ++i) out.push_back(order[top + (i * rest) / want]);
    return out;
}

}  // namespace

WarpedSurrogate fit_surrogate(const Matrix& X, const Vector& y, const BasqConfig& cfg, int dim,
                              const std::optional<Kernel>& warm, int restarts, std::uint64_t seed) {
    const WarpConstants consts = warp_constants(y, cfg.warp);
    const Vector h = warp_forward(y, consts, cfg.warp);
    const auto order = order_desc(y);
    const auto gp_rows = top_and_strided(order, static_cast<std::size_t>(cfg.n_gp_max));
    const std::vector<Eigen::Index> fit_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.n_fit_max))));

    HyperFitOptions opts;
    opts.restarts = restarts;
    opts.seed = seed;
    opts.warm_start = warm;
    opts.max_iters = warm ? 30 : 100;
    opts.log_lengthscale_prior_sd = 1.0;
    opts.max_rel_lengthscale = 2.0;
    {
        const auto n_top = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(2, cfg.proposal.top_points)));
        const Matrix top = take_rows(X, order, n_top);
        const Eigen::RowVectorXd mean = top.colwise().mean();
        opts.reference_spread = ((top.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(n_top)).cwiseSqrt().transpose();
    }
    const double h2 = h.cwiseAbs2().maxCoeff();
    opts.max_output_scale = std::max(1e4, 10.0 * h2);
    if (!std::isfinite(opts.max_output_scale)) throw NumericOverflow("warped targets exceed the double range");
    Kernel k = fit_hyperparams(take_rows(X, fit_rows, fit_rows.size()), take(h, fit_rows, fit_rows.size()), opts);
    if (k.dim() != dim) throw ConfigError("surrogate dimension mismatch");
    GpState gp(std::move(k), take_rows(X, gp_rows, gp_rows.size()), take(h, gp_rows, gp_rows.size()), opts.rel_nugget);
    return WarpedSurrogate(std::move(gp), consts, cfg.warp);
}

BasqResult run_basq(const LogLikelihoodFn& loglik, const GaussianPrior& prior, const BasqConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    const int d = prior.dim();
    Rng rng(cfg.seed);
    BasqResult res;
    res.observed = prior.sample(cfg.batch_size, rng);
    res.log_liks = evaluate(loglik, res.observed);

    try {
        std::optional<Kernel> warm;
        WarpedSurrogate s = fit_surrogate(res.observed, res.log_liks, cfg, d, warm, cfg.hyper_restarts, cfg.seed);
        ProposalMixture q = build_proposal(s, prior, res.observed, res.log_liks, cfg.proposal);
        Candidates cands = draw_candidates(exploration_proposal(q, s.base().kernel()), s, prior, cfg.n_super, cfg.uncertainty_ratio, rng);

        for (int it = 1; it <= cfg.max_iters; ++it) {
            const Matrix batch = select_batch(cands, s, cfg.batch_size, rng, res.landmark_count);
            append(res.observed, res.log_liks, batch, evaluate(loglik, batch));

            warm = s.base().kernel();
            s = fit_surrogate(res.observed, res.log_liks, cfg, d, warm, 0, cfg.seed + static_cast<std::uint64_t>(it));
            q = build_proposal(s, prior, res.observed, res.log_liks, cfg.proposal);
            cands = draw_candidates(exploration_proposal(q, s.base().kernel()), s, prior, cfg.n_super, cfg.uncertainty_ratio, rng);

            EvidenceStep step = evidence_step(q, s, prior, cfg, rng);
            step.est.n_evals = static_cast<long>(res.observed.rows());
            step.est.wall_time_s = elapsed();
            if (cands.degenerate) step.est.diagnostic += (step.est.diagnostic.empty() ? "" : "; ") + std::string("degenerate supersample weights");
            res.node_count = step.nodes;
            res.history.snapshots.push_back(step.est);
            res.iterations = it;
            if (step.est.overflow) break;
            if (plateaued(res.history, cfg.plateau_window, cfg.conv_tol)) {
                res.converged = true;
                break;
            }
        }
        if (res.history.snapshots.empty()) {
            EvidenceStep step = evidence_step(q, s, prior, cfg, rng);
            step.est.n_evals = static_cast<long>(res.observed.rows());
            step.est.wall_time_s = elapsed();
            res.history.snapshots.push_back(step.est);
        }
        res.estimate = res.history.snapshots.back();
        res.surrogate = std::move(s);
        res.proposal = std::move(q);
    } catch (const NumericOverflow& e) {
        EvidenceEstimate est;
        est.overflow = true;
        est.lem = est.lev = est.lev_standardized = std::numeric_limits<double>::infinity();
        est.n_evals = static_cast<long>(res.observed.rows());
        est.wall_time_s = elapsed();
        est.diagnostic = e.what();
        res.history.snapshots.push_back(est);
        res.estimate = est;
    }
    return res;
}

BasqResult run_basq(const Dataset& data, const GaussianPrior& prior, int n_pairs, const BasqConfig& cfg,
                    LikelihoodMode mode) {
    if (prior.dim() != theta_dim(n_pairs)) {
        throw ConfigError("prior dimension " + std::to_string(prior.dim()) + " does not match a " +
                          std::to_string(n_pairs) + "-pair model (" + std::to_string(theta_dim(n_pairs)) + ")");
    }
    auto shared = std::make_shared<const Dataset>(data);
    return run_basq(ecm_log_likelihood(shared, n_pairs, mode), prior, cfg);
}

WeightedSamples posterior_samples(const BasqResult& run, const GaussianPrior& prior, Eigen::Index n,
                                  std::uint64_t seed) {
    if (!run.surrogate) throw DegenerateWeights("the run has no trained surrogate");
    Rng rng(seed);
    Matrix pts;
    Vector log_q(n);
    if (run.proposal) {
        pts = run.proposal->sample(n, rng);
        log_q = run.proposal->log_pdf(pts);
    } else {
        pts = prior.sample(n, rng);
        for (Eigen::Index i = 0; i < n; ++i) log_q[i] = prior.log_pdf(pts.row(i).transpose());
    }
    const Vector mu_f = run.surrogate->mean_f(pts);
    Vector log_w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        log_w[i] = mu_f[i] > 0.0 ? std::log(mu_f[i]) + prior.log_pdf(pts.row(i).transpose()) - log_q[i] : kNegInf;
    }
    // Same truncation as the evidence supersample: weights capped at sqrt(n) times their mean.
    const double log_cap = log_sum_exp(log_w) - 0.5 * std::log(static_cast<double>(n));
    log_w = log_w.cwiseMin(log_cap);
    WeightedSamples out;
    out.ess = effective_sample_size(log_w);
    if (!(out.ess >= 10.0)) {
        throw DegenerateWeights("posterior effective sample size " + std::to_string(out.ess) + " < 10");
    }
    const double lse = log_sum_exp(log_w);
    out.weights = (log_w.array() - lse).exp().matrix();
    out.points = std::move(pts);
    return out;
}

json history_to_json(const RunHistory& h) {
    json arr = json::array();
    for (std::size_t i = 0; i < h.snapshots.size(); ++i) {
        json j = h.snapshots[i].to_json();
        j["iter"] = i + 1;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::string learning_curve_csv(const RunHistory& h) {
    std::ostringstream out;
    out << "iter,n_evals,wall_time_s,lem,lev\n";
    char buf[160];
    for (std::size_t i = 0; i < h.snapshots.size(); ++i) {
        const auto& e = h.snapshots[i];
        std::snprintf(buf, sizeof buf, "%zu,%ld,%.6f,%.17g,%.17g\n", i + 1, e.n_evals, e.wall_time_s, e.lem, e.lev);
        out << buf;
    }
    return out.str();
}

}  // namespace ecmbq
