#include "ecmbq/recombination.hpp"

#include "ecmbq/errors.hpp"

#include <map>
#include <numeric>

namespace ecmbq {

Vector ProposalMixture::log_pdf(const Matrix& X) const {
    const Eigen::Index d = stddev.size();
    const Eigen::ArrayXd inv = stddev.array().inverse();
    const Matrix Xs = X * inv.matrix().asDiagonal();
    const Matrix Ms = means * inv.matrix().asDiagonal();
    Matrix D = -2.0 * Xs * Ms.transpose();
    D.colwise() += Xs.rowwise().squaredNorm();
    D.rowwise() += Ms.rowwise().squaredNorm().transpose();
    const double log_norm = -stddev.array().log().sum() - 0.5 * static_cast<double>(d) * kLn2Pi;
    Vector out(X.rows());
    Vector row(means.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        row = (log_weights.array() - 0.5 * D.row(i).transpose().array().max(0.0)).matrix();
        out[i] = log_sum_exp(row) + log_norm;
    }
    return out;
}

Matrix ProposalMixture::sample(Eigen::Index n, Rng& rng) const {
    std::vector<double> w(static_cast<std::size_t>(log_weights.size()));
    const double mx = log_weights.maxCoeff();
    for (Eigen::Index k = 0; k < log_weights.size(); ++k) w[static_cast<std::size_t>(k)] = std::exp(log_weights[k] - mx);
    std::discrete_distribution<Eigen::Index> pick(w.begin(), w.end());
    Matrix out(n, means.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index k = pick(rng);
        out.row(i) = means.row(k) + (stddev.array() * standard_normal(stddev.size(), rng).array()).matrix().transpose();
    }
    return out;
}

Vector midpoint_log_scores(const WarpedSurrogate& s, const GaussianPrior& prior, const Matrix& mids) {
    Vector mu, var;
    s.mean_var_g(mids, mu, var);
    Vector out(mids.rows());
    for (Eigen::Index i = 0; i < mids.rows(); ++i) {
        if (!(mu[i] > 0.0) || !(var[i] > 0.0)) {
            out[i] = kNegInf;
            continue;
        }
        out[i] = std::log(var[i]) + std::log(mu[i]) + prior.log_pdf(mids.row(i).transpose());
    }
    return out;
}

ProposalMixture build_proposal(const WarpedSurrogate& s, const GaussianPrior& prior, const Matrix& observed,
                               const Vector& log_liks, const ProposalOptions& opts) {
    const Eigen::Index n = observed.rows();
    if (n < 2) throw ConfigError("the midpoint proposal needs at least two observed points");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return log_liks[a] > log_liks[b]; });
    const auto top = static_cast<std::size_t>(std::min<Eigen::Index>(opts.top_points, n));

    const Eigen::Index n_pairs = static_cast<Eigen::Index>(top * (top - 1) / 2);
    Matrix mids(n_pairs, observed.cols());
    Eigen::Index p = 0;
    for (std::size_t r = 0; r < top; ++r) {
        for (std::size_t t = r + 1; t < top; ++t) {
            mids.row(p++) = 0.5 * (observed.row(order[r]) + observed.row(order[t]));
        }
    }

    ProposalMixture q;
    Vector scores = midpoint_log_scores(s, prior, mids);
    if (!std::isfinite(scores.maxCoeff())) {
        q.prior_fallback = true;
        for (Eigen::Index i = 0; i < n_pairs; ++i) scores[i] = prior.log_pdf(mids.row(i).transpose());
    }
    if (n_pairs > opts.max_components) {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_pairs));
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });
        idx.resize(static_cast<std::size_t>(opts.max_components));
        Matrix kept(opts.max_components, mids.cols());
        Vector kept_scores(opts.max_components);
        for (Eigen::Index i = 0; i < opts.max_components; ++i) {
            kept.row(i) = mids.row(idx[static_cast<std::size_t>(i)]);
            kept_scores[i] = scores[idx[static_cast<std::size_t>(i)]];
        }
        mids = std::move(kept);
        scores = std::move(kept_scores);
    }
    q.means = std::move(mids);
    q.log_weights = (scores.array() - log_sum_exp(scores)).matrix();
    q.stddev = 0.5 * s.base().kernel().lengthscales;
    return q;
}

Supersample weigh_supersample(Matrix points, Vector log_q, const Vector& log_target, Rng& rng) {
    Supersample ss;
    const Eigen::Index n = points.rows();
    ss.points = std::move(points);
    ss.log_q = std::move(log_q);
    ss.log_w = log_target - ss.log_q;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::isnan(ss.log_w[i])) ss.log_w[i] = kNegInf;
    }
    ss.log_z = log_sum_exp(ss.log_w) - std::log(static_cast<double>(n));
    ss.ess = effective_sample_size(ss.log_w);
    if (!(ss.ess >= 2.0)) {
        throw DegenerateWeights("supersample effective sample size " + std::to_string(ss.ess) + " < 2");
    }
    const auto draws = systematic_resample(ss.log_w, static_cast<std::size_t>(n), rng);
    std::map<Eigen::Index, double> merged;
    for (Eigen::Index i : draws) merged[i] += 1.0;
    ss.counts.resize(static_cast<Eigen::Index>(merged.size()));
    Eigen::Index k = 0;
    for (const auto& [idx, c] : merged) {
        ss.resampled.push_back(idx);
        ss.counts[k++] = c;
    }
    return ss;
}

Supersample supersample(const ProposalMixture& q, const WarpedSurrogate& s, const GaussianPrior& prior,
                        Eigen::Index n_super, Rng& rng) {
    if (n_super < 1) throw ConfigError("n_super must be positive");
    Matrix pts = q.sample(n_super, rng);
    Vector log_q = q.log_pdf(pts);
    Vector log_target = midpoint_log_scores(s, prior, pts);
    return weigh_supersample(std::move(pts), std::move(log_q), log_target, rng);
}

namespace {

// Caratheodory reduction of one point set. Rows of A are [1, features]; returns the new weights,
// at most rank(A) of them nonzero.
Vector caratheodory(const Matrix& A, Vector w) {
    const Eigen::Index K = A.rows();
    Eigen::BDCSVD<Matrix> svd(A.transpose(), Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double tol = static_cast<double>(std::max(A.rows(), A.cols())) * 1e-15 * (sv.size() ? sv[0] : 0.0);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv[rank] > tol) ++rank;
    Matrix N = svd.matrixV().rightCols(K - rank);
    std::vector<bool> alive(static_cast<std::size_t>(N.cols()), true);

    // Removes row i from every remaining null vector, spending the one with the largest entry there.
    std::vector<bool> dead(static_cast<std::size_t>(K));
    for (Eigen::Index i = 0; i < K; ++i) dead[static_cast<std::size_t>(i)] = !(w[i] > 0.0);
    auto retire = [&](Eigen::Index i) {
        dead[static_cast<std::size_t>(i)] = true;
        Eigen::Index p = -1;
        double best = 0.0;
        for (Eigen::Index k = 0; k < N.cols(); ++k) {
            if (alive[static_cast<std::size_t>(k)] && std::abs(N(i, k)) > best) {
                best = std::abs(N(i, k));
                p = k;
            }
        }
        if (p < 0 || best <= 1e-12 * N.col(p).cwiseAbs().maxCoeff()) {
            N.row(i).setZero();
            return;
        }
        alive[static_cast<std::size_t>(p)] = false;
        for (Eigen::Index k = 0; k < N.cols(); ++k) {
            if (alive[static_cast<std::size_t>(k)]) N.col(k) -= (N(i, k) / N(i, p)) * N.col(p);
        }
    };

    for (Eigen::Index j = 0; j < N.cols(); ++j) {
        if (!alive[static_cast<std::size_t>(j)]) continue;
        alive[static_cast<std::size_t>(j)] = false;
        Vector c = N.col(j);
        double cmax = 0.0;
        for (Eigen::Index i = 0; i < K; ++i) {
            if (w[i] > 0.0) cmax = std::max(cmax, std::abs(c[i]));
        }
        if (!(cmax > 0.0)) continue;
        auto pick = [&](const Vector& cc) {
            Eigen::Index best = -1;
            double ratio = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < K; ++i) {
                if (w[i] > 0.0 && cc[i] > 1e-12 * cmax && w[i] / cc[i] < ratio) {
                    ratio = w[i] / cc[i];
                    best = i;
                }
            }
            return best;
        };
        Eigen::Index i_star = pick(c);
        if (i_star < 0) {
            c = -c;
            i_star = pick(c);
            if (i_star < 0) continue;
        }
        const double t = w[i_star] / c[i_star];
        w -= t * c;
        for (Eigen::Index k = 0; k < N.cols(); ++k) {
            if (alive[static_cast<std::size_t>(k)]) N.col(k) -= (N(i_star, k) / c[i_star]) * c;
        }
        dead[static_cast<std::size_t>(i_star)] = true;
        N.row(i_star).setZero();
        for (Eigen::Index i = 0; i < K; ++i) {
            if (dead[static_cast<std::size_t>(i)]) w[i] = 0.0;
        }
        const double wmax = w.maxCoeff();
        for (Eigen::Index i = 0; i < K; ++i) {
            if (!dead[static_cast<std::size_t>(i)] && w[i] <= 1e-14 * wmax) {
                w[i] = 0.0;
                retire(i);
            }
        }
    }
    return w;
}

}  // namespace

QuadratureNodes recombine(const Matrix& candidates, const Matrix& features, const Vector& weights) {
    const Eigen::Index n = candidates.rows();
    if (features.rows() != n || weights.size() != n) {
        throw ConfigError("recombination inputs disagree in length");
    }
    const Eigen::Index M = features.cols();

    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (weights[i] > 0.0) active.push_back(i);
    }
    Vector w = weights.cwiseMax(0.0);

    // Scale each feature to unit weighted RMS so that the rank test is not dominated by units.
    Matrix A(n, M + 1);
    A.col(0).setOnes();
    const double total = w.sum();
    for (Eigen::Index k = 0; k < M; ++k) {
        const double rms = total > 0.0 ? std::sqrt(w.dot(features.col(k).cwiseAbs2()) / total) : 0.0;
        A.col(k + 1) = rms > 0.0 ? (features.col(k) / rms).eval() : features.col(k);
    }
    const Vector target = A.transpose() * w;

    const auto group_limit = static_cast<std::size_t>(2 * (M + 1));
    while (active.size() > group_limit) {
        const std::size_t G = group_limit;
        const std::size_t sz = active.size();
        Matrix means = Matrix::Zero(static_cast<Eigen::Index>(G), M + 1);
        Vector mass = Vector::Zero(static_cast<Eigen::Index>(G));
        std::vector<std::size_t> start(G + 1);
        for (std::size_t g = 0; g <= G; ++g) start[g] = g * sz / G;
        for (std::size_t g = 0; g < G; ++g) {
            for (std::size_t a = start[g]; a < start[g + 1]; ++a) {
                const Eigen::Index i = active[a];
                mass[static_cast<Eigen::Index>(g)] += w[i];
                means.row(static_cast<Eigen::Index>(g)) += w[i] * A.row(i);
            }
            if (mass[static_cast<Eigen::Index>(g)] > 0.0) {
                means.row(static_cast<Eigen::Index>(g)) /= mass[static_cast<Eigen::Index>(g)];
            }
        }
        const Vector new_mass = caratheodory(means, mass);
        std::vector<Eigen::Index> next;
        for (std::size_t g = 0; g < G; ++g) {
            const double nm = new_mass[static_cast<Eigen::Index>(g)];
            const double om = mass[static_cast<Eigen::Index>(g)];
            for (std::size_t a = start[g]; a < start[g + 1]; ++a) {
                const Eigen::Index i = active[a];
                if (nm > 0.0 && om > 0.0) {
                    w[i] *= nm / om;
                    next.push_back(i);
                } else {
                    w[i] = 0.0;
                }
            }
        }
        if (next.size() == active.size()) break;
        active = std::move(next);
    }

    if (active.size() > 1) {
        Matrix sub(static_cast<Eigen::Index>(active.size()), M + 1);
        Vector ws(static_cast<Eigen::Index>(active.size()));
        for (std::size_t a = 0; a < active.size(); ++a) {
            sub.row(static_cast<Eigen::Index>(a)) = A.row(active[a]);
            ws[static_cast<Eigen::Index>(a)] = w[active[a]];
        }
        const Vector reduced = caratheodory(sub, ws);
        std::vector<Eigen::Index> next;
        for (std::size_t a = 0; a < active.size(); ++a) {
            w[active[a]] = reduced[static_cast<Eigen::Index>(a)];
            if (reduced[static_cast<Eigen::Index>(a)] > 0.0) next.push_back(active[a]);
        }
        active = std::move(next);
    }

    // Least-squares polish of the surviving weights; kept only if it stays positive and helps.
    Matrix S(M + 1, static_cast<Eigen::Index>(active.size()));
    Vector ws(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
        S.col(static_cast<Eigen::Index>(a)) = A.row(active[a]).transpose();
        ws[static_cast<Eigen::Index>(a)] = w[active[a]];
    }
    if (!active.empty()) {
        const Vector polished = S.completeOrthogonalDecomposition().solve(target);
        if ((polished.array() > 0.0).all() && (S * polished - target).norm() < (S * ws - target).norm()) ws = polished;
    }

    QuadratureNodes out;
    out.points.resize(static_cast<Eigen::Index>(active.size()), candidates.cols());
    out.weights = ws;
    for (std::size_t a = 0; a < active.size(); ++a) {
        out.points.row(static_cast<Eigen::Index>(a)) = candidates.row(active[a]);
        out.indices.push_back(active[a]);
    }
    return out;
}

Matrix nystrom_features(const CrossCov& cov, const Matrix& candidates, const Matrix& landmarks) {
    Matrix Kll = cov(landmarks, landmarks);
    Kll = 0.5 * (Kll + Kll.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Kll);
    const Vector& lam = eig.eigenvalues();
    const double lmax = lam.size() ? lam.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] > 1e-10 * lmax && lam[i] > 0.0) keep.push_back(i);
    }
    Matrix proj(landmarks.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        proj.col(static_cast<Eigen::Index>(k)) = eig.eigenvectors().col(keep[k]) / std::sqrt(lam[keep[k]]);
    }
    return cov(candidates, landmarks) * proj;
}

}  // namespace ecmbq
