#include "ecmbq/criteria.hpp"

#include "ecmbq/errors.hpp"
#include "ecmbq/optimize.hpp"

#include <cstdio>
#include <sstream>

namespace ecmbq {

MapEstimate map_estimate(const Matrix& candidates, const LogLikelihoodFn& loglik, const GaussianPrior& prior,
                         int max_evals) {
    if (candidates.rows() == 0) throw ConfigError("map_estimate needs at least one candidate");
    auto log_post = [&](const Vector& x) { return loglik(x) + prior.log_pdf(x); };

    MapEstimate out;
    for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
        const double lp = log_post(candidates.row(i).transpose());
        if (lp > out.log_post) {
            out.log_post = lp;
            out.start_index = i;
        }
    }
    if (out.start_index < 0) out.start_index = 0;
    Vector x = candidates.row(out.start_index).transpose();
    double best = log_post(x);

    auto neg = [&](const Vector& v) { return -log_post(v); };
    double step = 0.05;
    int budget = max_evals;
    for (int round = 0; round < 4 && budget > 0; ++round) {
        const int iters = budget / 4 + 1;
        const OptimResult r = minimize_nelder_mead(neg, x, Vector::Constant(x.size(), step), iters, 1e-12);
        budget -= r.evaluations;
        if (-r.value > best) {
            best = -r.value;
            x = r.x;
        }
        step *= 0.2;
    }
    out.theta = x;
    out.log_post = best;
    out.log_lik = loglik(x);
    return out;
}

double rmse(const Vector& theta, const Dataset& data, int n_pairs, LikelihoodMode mode) {
    const Vector r = residual_terms(theta, data, n_pairs, mode);
    return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

double bic(double log_lik, int dim, Eigen::Index m) {
    return static_cast<double>(dim) * std::log(static_cast<double>(m)) - 2.0 * log_lik;
}

PointwiseLogLik ecm_pointwise_log_lik(std::shared_ptr<const Dataset> data, int n_pairs, LikelihoodMode mode) {
    return [data = std::move(data), n_pairs, mode](const Vector& theta) {
        const Eigen::Index m = data->m();
        Vector out = Vector::Constant(m, kNegInf);
        Vector r;
        try {
            r = residual_terms(theta, *data, n_pairs, mode);
        } catch (const DegenerateParams&) {
            return out;
        }
        const double ls2 = theta[theta.size() - 1];
        const double inv = std::exp(-ls2);
        for (Eigen::Index j = 0; j < m; ++j) {
            out[j] = -(kLn2Pi + ls2) - 0.5 * (r[j] * r[j] + r[m + j] * r[m + j]) * inv;
        }
        return out;
    };
}

double elpd(const Matrix& samples, const Vector& weights, const PointwiseLogLik& pointwise) {
    const Eigen::Index n = samples.rows();
    if (n == 0) throw DegenerateWeights("no posterior samples");
    if (weights.size() != 0 && weights.size() != n) throw ConfigError("weights and samples differ in length");

    Vector log_w(n);
    if (weights.size() == 0) {
        log_w.setConstant(-std::log(static_cast<double>(n)));
    } else {
        const double total = weights.sum();
        if (!(total > 0.0)) throw DegenerateWeights("posterior weights sum to zero");
        for (Eigen::Index s = 0; s < n; ++s) log_w[s] = weights[s] > 0.0 ? std::log(weights[s] / total) : kNegInf;
    }

    // terms(j, s) = ln w_s + ln p(y_j | theta_s)
    Matrix terms;
    for (Eigen::Index s = 0; s < n; ++s) {
        const Vector lp = pointwise(samples.row(s).transpose());
        if (s == 0) terms = Matrix::Constant(lp.size(), n, kNegInf);
        if (std::isfinite(log_w[s])) terms.col(s) = lp.array() + log_w[s];
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < terms.rows(); ++j) total += log_sum_exp(Vector(terms.row(j).transpose()));
    return total;
}

double elpd(const Matrix& samples, const Vector& weights, const Dataset& data, int n_pairs, LikelihoodMode mode) {
    return elpd(samples, weights, ecm_pointwise_log_lik(std::make_shared<const Dataset>(data), n_pairs, mode));
}

const char* criterion_name(Criterion c) {
    switch (c) {
        case Criterion::Lem: return "LEM";
        case Criterion::Rmse: return "RMSE";
        case Criterion::Bic: return "BIC";
        case Criterion::Elpd: return "ELPD";
    }
    return "?";
}

bool maximised(Criterion c) { return c == Criterion::Lem || c == Criterion::Elpd; }

double ModelCriteria::value(Criterion c) const {
    switch (c) {
        case Criterion::Lem: return lem;
        case Criterion::Rmse: return rmse;
        case Criterion::Bic: return bic;
        case Criterion::Elpd: return elpd;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace {

constexpr Criterion kAll[] = {Criterion::Lem, Criterion::Rmse, Criterion::Bic, Criterion::Elpd};

std::string fmt(double v) {
    char buf[64];
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    if (std::abs(v) >= 1e6 || (std::abs(v) < 1e-3 && v != 0.0)) {
        std::snprintf(buf, sizeof buf, "%.4e", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.3f", v);
    }
    return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void CriteriaReport::select() {
    selected_by.clear();
    for (Criterion c : kAll) {
        const ModelCriteria* best = nullptr;
        for (const auto& mc : models) {
            const double v = mc.value(c);
            if (mc.failed || !std::isfinite(v)) continue;
            if (!best || (maximised(c) ? v > best->value(c) : v < best->value(c))) best = &mc;
        }
        if (best) selected_by[c] = best->n_pairs;
    }
}

json CriteriaReport::to_json() const {
    json out;
    json arr = json::array();
    for (const auto& mc : models) {
        json j;
        j["n_pairs"] = mc.n_pairs;
        j["lem"] = finite_or_null(mc.lem);
        j["lev_standardized"] = finite_or_null(mc.lev_standardized);
        j["rmse"] = finite_or_null(mc.rmse);
        j["bic"] = finite_or_null(mc.bic);
        j["elpd"] = finite_or_null(mc.elpd);
        j["theta_map"] = ecmbq::to_json(mc.theta_map);
        j["n_evals"] = mc.n_evals;
        j["failed"] = mc.failed;
        if (!mc.diagnostic.empty()) j["diagnostic"] = mc.diagnostic;
        arr.push_back(std::move(j));
    }
    out["models"] = std::move(arr);
    json sel = json::object();
    for (const auto& [c, order] : selected_by) sel[criterion_name(c)] = order;
    out["selected_by"] = std::move(sel);
    return out;
}

std::string CriteriaReport::table() const {
    std::ostringstream out;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-18s", "");
    out << buf;
    for (const auto& mc : models) {
        std::snprintf(buf, sizeof buf, " %16s", (std::to_string(mc.n_pairs) + " RC pair" + (mc.n_pairs == 1 ? "" : "s")).c_str());
        out << buf;
    }
    out << '\n';
    auto row = [&](const std::string& name, auto get, std::optional<Criterion> crit) {
        std::snprintf(buf, sizeof buf, "%-18s", name.c_str());
        out << buf;
        for (const auto& mc : models) {
            std::string cell = mc.failed ? "failed" : fmt(get(mc));
            if (crit) {
                auto it = selected_by.find(*crit);
                if (it != selected_by.end() && it->second == mc.n_pairs && !mc.failed) cell = "*" + cell;
            }
            std::snprintf(buf, sizeof buf, " %16s", cell.c_str());
            out << buf;
        }
        out << '\n';
    };
    row("LEM", [](const ModelCriteria& m) { return m.lem; }, Criterion::Lem);
    row("LEV (standardised)", [](const ModelCriteria& m) { return m.lev_standardized; }, std::nullopt);
    row("RMSE", [](const ModelCriteria& m) { return m.rmse; }, Criterion::Rmse);
    row("BIC", [](const ModelCriteria& m) { return m.bic; }, Criterion::Bic);
    row("ELPD", [](const ModelCriteria& m) { return m.elpd; }, Criterion::Elpd);
    out << "(* marks the selected model: LEM and ELPD maximised, RMSE and BIC minimised)\n";
    return out.str();
}

const std::vector<std::string>& CorrelationResult::labels() {
    static const std::vector<std::string> l{"m", "JS", "SNR", "LEM", "LEV"};
    return l;
}

double pearson(const Vector& a, const Vector& b, bool* zero_variance) {
    const double ma = a.mean();
    const double mb = b.mean();
    const Eigen::ArrayXd da = a.array() - ma;
    const Eigen::ArrayXd db = b.array() - mb;
    const double saa = da.square().sum();
    const double sbb = db.square().sum();
    const bool degenerate = !(saa > 0.0) || !(sbb > 0.0);
    if (zero_variance) *zero_variance = degenerate;
    if (degenerate) return 0.0;
    return (da * db).sum() / std::sqrt(saa * sbb);
}

CorrelationResult correlation_matrix(const std::vector<SensitivityRecord>& records) {
    if (records.size() < 3) throw ConfigError("correlation analysis needs at least three records");
    const auto n = static_cast<Eigen::Index>(records.size());
    Matrix cols(n, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        cols.row(i) << r.m, r.js, r.snr, r.lem, r.lev;
    }
    CorrelationResult out;
    out.coefficients = Matrix::Identity(5, 5);
    out.zero_variance.assign(5, false);
    for (int k = 0; k < 5; ++k) {
        bool zv = false;
        pearson(cols.col(k), cols.col(k), &zv);
        out.zero_variance[static_cast<std::size_t>(k)] = zv;
    }
    for (int a = 0; a < 5; ++a) {
        for (int b = 0; b < a; ++b) {
            out.coefficients(a, b) = out.coefficients(b, a) = pearson(cols.col(a), cols.col(b));
        }
    }
    return out;
}

BicRegression bic_regression(std::vector<SensitivityRecord>& records) {
    if (records.size() < 3) throw ConfigError("BIC regression needs at least three records");
    const auto n = static_cast<Eigen::Index>(records.size());
    Vector x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = records[static_cast<std::size_t>(i)].bic;
        y[i] = records[static_cast<std::size_t>(i)].lem;
    }
    BicRegression out;
    const double mx = x.mean();
    const double my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    out.slope = sxx > 0.0 ? ((x.array() - mx) * (y.array() - my)).sum() / sxx : 0.0;
    out.intercept = my - out.slope * mx;
    out.residuals.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = out.slope * x[i] + out.intercept - y[i];
        out.residuals[i] = e * e;
        records[static_cast<std::size_t>(i)].residual = e * e;
    }
    return out;
}

}  // namespace ecmbq
