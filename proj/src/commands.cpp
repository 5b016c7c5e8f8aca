#include "ecmbq/commands.hpp"

#include "ecmbq/errors.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

namespace ecmbq {

namespace {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("field '") + key + "' has the wrong type");
    }
}

void require_object(const json& j, const char* what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + " configuration must be a JSON object");
}

EcmParams make_params(double r_total, std::initializer_list<double> r, std::initializer_list<double> tau) {
    EcmParams p;
    p.r_total = r_total;
    p.r_prime.resize(static_cast<Eigen::Index>(r.size()));
    p.tau_std.resize(static_cast<Eigen::Index>(tau.size()));
    Eigen::Index i = 0;
    for (double v : r) p.r_prime[i++] = inverse_resistance_fraction(v);
    i = 0;
    for (double v : tau) p.tau_std[i++] = v;
    return p;
}

json params_to_json(const EcmParams& p) {
    Vector r(p.n_pairs());
    for (int i = 0; i < p.n_pairs(); ++i) r[i] = resistance_fraction(p.r_prime[i]);
    return json{{"r_total", p.r_total}, {"r_prime", to_json(p.r_prime)}, {"r", to_json(r)}, {"tau_std", to_json(p.tau_std)}};
}

EcmParams params_from_json(const json& j) {
    require_object(j, "circuit");
    EcmParams p;
    read_opt(j, "r_total", p.r_total);
    if (j.contains("r_prime")) {
        p.r_prime = vector_from_json(j["r_prime"], "r_prime");
    } else {
        const Vector r = vector_from_json(require_field(j, "r"), "r");
        p.r_prime.resize(r.size());
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            if (!(r[i] > 0.0 && r[i] < 1.0)) throw ConfigError("resistance fractions must lie in (0, 1)");
            p.r_prime[i] = inverse_resistance_fraction(r[i]);
        }
    }
    p.tau_std = vector_from_json(require_field(j, "tau_std"), "tau_std");
    if (!p.valid()) throw ConfigError("circuit needs matching, finite r and tau_std entries");
    return p;
}

const char* mode_name(LikelihoodMode m) { return m == LikelihoodMode::Residual ? "residual" : "literal_squared"; }

LikelihoodMode mode_from_name(const std::string& s) {
    if (s == "residual") return LikelihoodMode::Residual;
    if (s == "literal_squared") return LikelihoodMode::LiteralSquared;
    throw ConfigError("unknown likelihood mode '" + s + "'");
}

BasqConfig basq_field(const json& j, BasqConfig defaults) {
    return j.contains("basq") ? BasqConfig::from_json(j["basq"], defaults) : defaults;
}

// Top-k observed rows by unnormalised log posterior, best first.
Matrix top_candidates(const BasqResult& run, const GaussianPrior& prior, int k) {
    const Eigen::Index n = run.observed.rows();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Vector score(n);
    for (Eigen::Index i = 0; i < n; ++i) score[i] = run.log_liks[i] + prior.log_pdf(run.observed.row(i).transpose());
    const auto keep = static_cast<std::size_t>(std::min<Eigen::Index>(k, n));
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return score[a] > score[b]; });
    Matrix out(static_cast<Eigen::Index>(keep), run.observed.cols());
    for (std::size_t i = 0; i < keep; ++i) out.row(static_cast<Eigen::Index>(i)) = run.observed.row(idx[i]);
    return out;
}

void add_note(std::string& s, const std::string& note) { s += (s.empty() ? "" : "; ") + note; }

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Preset preset(const std::string& name) {
    Preset p;
    p.name = name;
    if (name == "easy") {
        p.params = make_params(0.0, {0.3, 0.4}, {-0.98, 0.98});
        p.log_sigma2 = -9.97;
    } else if (name == "hard") {
        p.params = make_params(0.0, {0.25, 0.3, 0.2}, {-0.98, 0.98, 0.9026});
        p.log_sigma2 = -1.6;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected easy or hard)");
    }
    return p;
}

json GenerateConfig::to_json() const {
    json j{{"preset", preset}, {"seed", seed}};
    if (params) j["params"] = params_to_json(*params);
    if (log_sigma2) j["log_sigma2"] = *log_sigma2;
    if (m) j["m"] = *m;
    if (span_decades) j["span_decades"] = *span_decades;
    return j;
}

GenerateConfig GenerateConfig::from_json(const json& j) {
    require_object(j, "generate");
    GenerateConfig c;
    read_opt(j, "preset", c.preset);
    read_opt(j, "seed", c.seed);
    if (j.contains("params") && !j["params"].is_null()) c.params = params_from_json(j["params"]);
    if (j.contains("log_sigma2") && !j["log_sigma2"].is_null()) c.log_sigma2 = j["log_sigma2"].get<double>();
    if (j.contains("m") && !j["m"].is_null()) c.m = j["m"].get<Eigen::Index>();
    if (j.contains("span_decades") && !j["span_decades"].is_null()) c.span_decades = j["span_decades"].get<double>();
    return c;
}

Dataset make_dataset(const GenerateConfig& cfg) {
    const Preset p = preset(cfg.preset);
    const EcmParams truth = cfg.params.value_or(p.params);
    const Eigen::Index m = cfg.m.value_or(p.m);
    const double span = cfg.span_decades.value_or(p.span_decades);
    if (m < 2) throw ConfigError("a dataset needs at least two frequencies");
    if (!(span > 0.0)) throw ConfigError("span_decades must be positive");
    return generate(truth, m, span, NoiseSpec{cfg.log_sigma2.value_or(p.log_sigma2)}, cfg.seed);
}

json SelectConfig::to_json() const {
    return json{{"orders", orders},
                {"basq", basq.to_json()},
                {"map_evals", map_evals},
                {"posterior_draws", posterior_draws},
                {"posterior_samples", posterior_samples},
                {"prior_sd", prior_sd},
                {"likelihood", mode_name(mode)},
                {"seed", seed}};
}

SelectConfig SelectConfig::from_json(const json& j) {
    require_object(j, "select");
    SelectConfig c;
    read_opt(j, "orders", c.orders);
    c.basq = basq_field(j, c.basq);
    read_opt(j, "map_evals", c.map_evals);
    read_opt(j, "posterior_draws", c.posterior_draws);
    read_opt(j, "posterior_samples", c.posterior_samples);
    read_opt(j, "prior_sd", c.prior_sd);
    read_opt(j, "seed", c.seed);
    if (j.contains("likelihood")) c.mode = mode_from_name(j["likelihood"].get<std::string>());
    if (c.orders.empty()) throw ConfigError("select needs at least one model order");
    for (int o : c.orders) {
        if (o < 1) throw ConfigError("model orders must be at least 1");
    }
    if (!(c.prior_sd > 0.0)) throw ConfigError("prior_sd must be positive");
    if (c.posterior_samples < 1 || c.posterior_draws < c.posterior_samples) {
        throw ConfigError("posterior_draws must be at least posterior_samples >= 1");
    }
    return c;
}

ModelCriteria evaluate_model(const Dataset& data, int n_pairs, const SelectConfig& cfg, BasqResult* keep) {
    ModelCriteria mc;
    mc.n_pairs = n_pairs;
    const int d = theta_dim(n_pairs);
    const GaussianPrior prior = GaussianPrior::isotropic(d, 0.0, cfg.prior_sd);
    BasqConfig bc = cfg.basq;
    bc.seed = cfg.seed * 1009 + static_cast<std::uint64_t>(n_pairs);
    auto shared = std::make_shared<const Dataset>(data);
    const LogLikelihoodFn loglik = ecm_log_likelihood(shared, n_pairs, cfg.mode);

    BasqResult run = run_basq(loglik, prior, bc);
    mc.lem = run.estimate.lem;
    mc.lev_standardized = run.estimate.lev_standardized;
    mc.n_evals = run.estimate.n_evals;
    mc.diagnostic = run.estimate.diagnostic;
    if (run.estimate.overflow || !std::isfinite(mc.lem)) {
        mc.failed = true;
        add_note(mc.diagnostic, "no finite evidence estimate");
    }

    const MapEstimate map = map_estimate(top_candidates(run, prior, 8), loglik, prior, cfg.map_evals);
    mc.theta_map = map.theta;
    try {
        mc.rmse = rmse(map.theta, data, n_pairs, cfg.mode);
        mc.bic = bic(map.log_lik, d, data.m());
    } catch (const DegenerateParams& e) {
        add_note(mc.diagnostic, e.what());
    }

    try {
        const WeightedSamples ws = posterior_samples(run, prior, cfg.posterior_draws, bc.seed + 7);
        if (ws.ess < 100.0) {
            add_note(mc.diagnostic, "ELPD skipped: posterior effective sample size " + std::to_string(ws.ess) + " < 100");
        } else {
            Rng rng(bc.seed + 11);
            Vector log_w = ws.weights.array().log().matrix();
            const auto idx = systematic_resample(log_w, static_cast<std::size_t>(cfg.posterior_samples), rng);
            Matrix samples(static_cast<Eigen::Index>(idx.size()), d);
            for (std::size_t i = 0; i < idx.size(); ++i) samples.row(static_cast<Eigen::Index>(i)) = ws.points.row(idx[i]);
            mc.elpd = elpd(samples, Vector(), ecm_pointwise_log_lik(shared, n_pairs, cfg.mode));
        }
    } catch (const DegenerateWeights& e) {
        add_note(mc.diagnostic, std::string("ELPD skipped: ") + e.what());
    }
    if (keep) *keep = std::move(run);
    return mc;
}

CriteriaReport select_models(const Dataset& data, const SelectConfig& cfg) {
    CriteriaReport report;
    for (int order : cfg.orders) {
        try {
            report.models.push_back(evaluate_model(data, order, cfg));
        } catch (const Error& e) {
            ModelCriteria mc;
            mc.n_pairs = order;
            mc.failed = true;
            mc.diagnostic = e.what();
            report.models.push_back(std::move(mc));
        }
    }
    report.select();
    return report;
}

json SweepRanges::to_json() const {
    return json{{"m", {m_min, m_max}},
                {"r_total", {r_total_min, r_total_max}},
                {"r_prime_1", {r_prime_min, r_prime_max}},
                {"tau_std_1", {tau_min, tau_max}},
                {"log_sigma2", {log_sigma2_min, log_sigma2_max}},
                {"r_2", r2},
                {"tau_std_2", tau2},
                {"span_decades", span_decades}};
}

json SensitivityConfig::to_json() const {
    return json{{"n_datasets", n_datasets}, {"ranges", ranges.to_json()}, {"basq", basq.to_json()},
                {"js_samples", js_samples}, {"map_evals", map_evals},       {"seed", seed}};
}

SensitivityConfig SensitivityConfig::from_json(const json& j) {
    require_object(j, "sensitivity");
    SensitivityConfig c;
    read_opt(j, "n_datasets", c.n_datasets);
    c.basq = basq_field(j, c.basq);
    read_opt(j, "js_samples", c.js_samples);
    read_opt(j, "map_evals", c.map_evals);
    read_opt(j, "seed", c.seed);
    if (j.contains("ranges")) {
        const json& r = j["ranges"];
        auto pair = [&](const char* key, auto& lo, auto& hi) {
            if (!r.contains(key)) return;
            const auto v = r[key].get<std::vector<double>>();
            if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError(std::string("range '") + key + "' must be [lo, hi]");
            lo = static_cast<std::decay_t<decltype(lo)>>(v[0]);
            hi = static_cast<std::decay_t<decltype(hi)>>(v[1]);
        };
        pair("m", c.ranges.m_min, c.ranges.m_max);
        pair("r_total", c.ranges.r_total_min, c.ranges.r_total_max);
        pair("r_prime_1", c.ranges.r_prime_min, c.ranges.r_prime_max);
        pair("tau_std_1", c.ranges.tau_min, c.ranges.tau_max);
        pair("log_sigma2", c.ranges.log_sigma2_min, c.ranges.log_sigma2_max);
        read_opt(r, "r_2", c.ranges.r2);
        read_opt(r, "tau_std_2", c.ranges.tau2);
        read_opt(r, "span_decades", c.ranges.span_decades);
    }
    if (c.n_datasets < 3) throw ConfigError("a sweep needs at least three datasets");
    if (c.ranges.m_min < 2) throw ConfigError("m range must start at 2 or more");
    if (!(c.ranges.r2 > 0.0 && c.ranges.r2 < 1.0)) throw ConfigError("r_2 must lie in (0, 1)");
    return c;
}

Matrix latin_hypercube(int n, int dims, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix out(n, dims);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int k = 0; k < dims; ++k) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i) out(i, k) = (perm[static_cast<std::size_t>(i)] + unif(rng)) / n;
    }
    return out;
}

SensitivityResult run_sensitivity(const SensitivityConfig& cfg) {
    const SweepRanges& rg = cfg.ranges;
    Rng rng(cfg.seed);
    const Matrix u = latin_hypercube(cfg.n_datasets, 5, rng);
    auto lerp = [](double lo, double hi, double t) { return lo + (hi - lo) * t; };

    SensitivityResult out;
    for (int k = 0; k < cfg.n_datasets; ++k) {
        const auto m = static_cast<Eigen::Index>(
            std::lround(lerp(static_cast<double>(rg.m_min), static_cast<double>(rg.m_max), u(k, 0))));
        EcmParams p;
        p.r_total = lerp(rg.r_total_min, rg.r_total_max, u(k, 1));
        p.r_prime.resize(2);
        p.r_prime << lerp(rg.r_prime_min, rg.r_prime_max, u(k, 2)), inverse_resistance_fraction(rg.r2);
        p.tau_std.resize(2);
        p.tau_std << lerp(rg.tau_min, rg.tau_max, u(k, 3)), rg.tau2;
        const double ls2 = lerp(rg.log_sigma2_min, rg.log_sigma2_max, u(k, 4));
        const std::uint64_t seed = cfg.seed * 100003 + static_cast<std::uint64_t>(k);
        try {
            const Dataset data = generate(p, m, rg.span_decades, NoiseSpec{ls2}, seed);
            SensitivityRecord rec;
            rec.m = static_cast<double>(m);
            rec.snr = snr_analytic(p, data.grid, ls2);
            rec.js = js_divergence(p, data.grid, 0, 1, cfg.js_samples, seed);

            const GaussianPrior prior = GaussianPrior::isotropic(theta_dim(2), 0.0, 2.0);
            auto shared = std::make_shared<const Dataset>(data);
            const LogLikelihoodFn loglik = ecm_log_likelihood(shared, 2);
            BasqConfig bc = cfg.basq;
            bc.seed = seed;
            const BasqResult run = run_basq(loglik, prior, bc);
            if (run.estimate.overflow || !std::isfinite(run.estimate.lem) ||
                !std::isfinite(run.estimate.lev_standardized)) {
                out.failures.push_back("dataset " + std::to_string(k) + ": no finite evidence estimate (" +
                                       run.estimate.diagnostic + ")");
                continue;
            }
            rec.lem = run.estimate.lem;
            rec.lev = run.estimate.lev_standardized;
            const MapEstimate map = map_estimate(top_candidates(run, prior, 4), loglik, prior, cfg.map_evals);
            rec.bic = bic(map.log_lik, theta_dim(2), m);
            out.records.push_back(rec);
        } catch (const Error& e) {
            out.failures.push_back("dataset " + std::to_string(k) + ": " + e.what());
        }
    }
    if (out.records.size() >= 3) {
        out.correlation = correlation_matrix(out.records);
        out.regression = bic_regression(out.records);
    }
    return out;
}

std::string SensitivityResult::records_csv() const {
    std::ostringstream s;
    s << "m,js,snr,lem,lev,bic,residual\n";
    for (const auto& r : records) {
        s << num(r.m) << ',' << num(r.js) << ',' << num(r.snr) << ',' << num(r.lem) << ',' << num(r.lev) << ','
          << num(r.bic) << ',' << num(r.residual) << '\n';
    }
    return s.str();
}

std::string SensitivityResult::correlation_table() const {
    std::ostringstream s;
    if (correlation.coefficients.size() == 0) return "too few records for correlations\n";
    const auto& labels = CorrelationResult::labels();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-6s", "");
    s << buf;
    for (const auto& l : labels) {
        std::snprintf(buf, sizeof buf, " %9s", l.c_str());
        s << buf;
    }
    s << '\n';
    for (int a = 0; a < 5; ++a) {
        std::snprintf(buf, sizeof buf, "%-6s", labels[static_cast<std::size_t>(a)].c_str());
        s << buf;
        for (int b = 0; b < 5; ++b) {
            std::snprintf(buf, sizeof buf, " %9.4f", correlation.coefficients(a, b));
            s << buf;
        }
        if (correlation.zero_variance[static_cast<std::size_t>(a)]) s << "  (constant column)";
        s << '\n';
    }
    return s.str();
}

json SensitivityResult::to_json() const {
    json j;
    j["n_records"] = records.size();
    j["failures"] = failures;
    if (correlation.coefficients.size() != 0) {
        j["labels"] = CorrelationResult::labels();
        j["correlation"] = ecmbq::to_json(correlation.coefficients);
        j["zero_variance"] = correlation.zero_variance;
        j["bic_regression"] = {{"slope", regression.slope}, {"intercept", regression.intercept}};
    }
    return j;
}

json BenchmarkConfig::to_json() const {
    return json{{"n_pairs", n_pairs},
                {"budget", budget},
                {"basq", basq.to_json()},
                {"oracle_samples", oracle.n_samples},
                {"seed", seed}};
}

BenchmarkConfig BenchmarkConfig::from_json(const json& j) {
    require_object(j, "benchmark");
    BenchmarkConfig c;
    read_opt(j, "n_pairs", c.n_pairs);
    read_opt(j, "budget", c.budget);
    c.basq = basq_field(j, c.basq);
    read_opt(j, "oracle_samples", c.oracle.n_samples);
    read_opt(j, "seed", c.seed);
    if (c.n_pairs < 1) throw ConfigError("n_pairs must be at least 1");
    if (c.budget < 2L * c.basq.batch_size) throw ConfigError("budget must cover at least two BASQ batches");
    return c;
}

BenchmarkResult run_benchmark(const Dataset& data, const BenchmarkConfig& cfg) {
    const int d = theta_dim(cfg.n_pairs);
    const GaussianPrior prior = GaussianPrior::isotropic(d, 0.0, 2.0);
    auto shared = std::make_shared<const Dataset>(data);
    const LogLikelihoodFn loglik = ecm_log_likelihood(shared, cfg.n_pairs);
    BenchmarkResult out;

    OracleConfig oc = cfg.oracle;
    oc.seed = cfg.seed + 1;
    const OracleResult oracle = oracle_evidence(loglik, prior, oc);
    out.oracle_lem = oracle.log_evidence;
    out.oracle_se = oracle.std_error;

    BasqConfig bc = cfg.basq;
    bc.seed = cfg.seed + 2;
    bc.max_iters = static_cast<int>(cfg.budget / bc.batch_size) - 1;
    const BasqResult run = run_basq(loglik, prior, bc);
    out.basq = run.history;
    out.basq_final = run.estimate.lem;
    out.basq_evals = run.estimate.n_evals;
    out.basq_time_s = run.estimate.wall_time_s;

    EssConfig ec;
    ec.n_steps = cfg.budget;
    ec.max_evals = cfg.budget;
    ec.seed = cfg.seed + 3;
    const EssChain chain = run_ess(loglik, prior, ec);
    std::vector<long> schedule;
    const long step = std::max(1L, cfg.budget / 20);
    for (long b = step; b < cfg.budget; b += step) schedule.push_back(b);
    schedule.push_back(cfg.budget);
    out.ess = elpd_checkpoints(chain, ecm_pointwise_log_lik(shared, cfg.n_pairs), schedule);
    if (!out.ess.empty()) {
        out.ess_final = out.ess.back().value;
        out.ess_time_s = out.ess.back().wall_time_s;
    }
    out.ess_evals = chain.n_evals;
    return out;
}

std::string BenchmarkResult::overlay_csv() const {
    std::ostringstream s;
    s << "engine,iter,n_evals,wall_time_s,value,oracle\n";
    for (std::size_t i = 0; i < basq.snapshots.size(); ++i) {
        const auto& e = basq.snapshots[i];
        s << "basq," << i + 1 << ',' << e.n_evals << ',' << num(e.wall_time_s) << ',' << num(e.lem) << ','
          << num(oracle_lem) << '\n';
    }
    for (std::size_t i = 0; i < ess.size(); ++i) {
        s << "ess," << i + 1 << ',' << ess[i].n_evals << ',' << num(ess[i].wall_time_s) << ',' << num(ess[i].value)
          << ',' << num(oracle_lem) << '\n';
    }
    return s.str();
}

json BenchmarkResult::to_json() const {
    return json{{"oracle_lem", oracle_lem},   {"oracle_std_error", oracle_se}, {"basq_lem", basq_final},
                {"basq_abs_error", basq_error()}, {"basq_evals", basq_evals}, {"basq_time_s", basq_time_s},
                {"ess_elpd", ess_final},       {"ess_abs_error", ess_error()}, {"ess_evals", ess_evals},
                {"ess_time_s", ess_time_s}};
}

json AblationConfig::to_json() const { return json{{"n_pairs", n_pairs}, {"basq", basq.to_json()}, {"seed", seed}}; }

AblationConfig AblationConfig::from_json(const json& j) {
    require_object(j, "ablation");
    AblationConfig c;
    read_opt(j, "n_pairs", c.n_pairs);
    c.basq = basq_field(j, c.basq);
    read_opt(j, "seed", c.seed);
    if (c.n_pairs < 1) throw ConfigError("n_pairs must be at least 1");
    return c;
}

std::vector<AblationRow> run_ablation(const Dataset& data, const AblationConfig& cfg) {
    const GaussianPrior prior = GaussianPrior::isotropic(theta_dim(cfg.n_pairs), 0.0, 2.0);
    std::vector<AblationRow> rows;
    for (const WarpConfig& w : WarpConfig::ablation_set()) {
        BasqConfig bc = cfg.basq;
        bc.warp = w;
        bc.seed = cfg.seed;
        AblationRow row{w, {}};
        try {
            row.estimate = run_basq(data, prior, cfg.n_pairs, bc).estimate;
        } catch (const Error& e) {
            row.estimate.diagnostic = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
    std::ostringstream s;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-18s %16s %16s  %s\n", "warp layers", "LEM", "LEV", "status");
    s << buf;
    for (const auto& r : rows) {
        const auto& e = r.estimate;
        std::string lem = e.overflow ? "overflow" : num(e.lem);
        std::string lev = e.overflow ? "overflow" : num(e.lev);
        if (!e.overflow) {
            std::snprintf(buf, sizeof buf, "%.4f", e.lem);
            lem = buf;
            std::snprintf(buf, sizeof buf, "%.4f", e.lev);
            lev = buf;
        }
        std::string status = e.overflow ? "overflow" : (std::isfinite(e.lem) ? "ok" : "failed");
        if (!e.diagnostic.empty() && !e.overflow) status += " (" + e.diagnostic + ")";
        std::snprintf(buf, sizeof buf, "%-18s %16s %16s  %s\n", r.warp.label().c_str(), lem.c_str(), lev.c_str(),
                      status.c_str());
        s << buf;
    }
    return s.str();
}

json ablation_json(const std::vector<AblationRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows) {
        json j = r.estimate.to_json();
        j["warp"] = r.warp.label();
        arr.push_back(std::move(j));
    }
    return arr;
}

IdentifiabilityReport identify_dataset(const Dataset& data, long n_is, std::uint64_t seed) {
    const auto truth = data.meta.true_params();
    if (!truth || !data.meta.log_sigma2) {
        throw MissingMetadata("identifiability needs the generating parameters and noise level of a synthetic dataset");
    }
    return identifiability_report(*truth, data.grid, *data.meta.log_sigma2, n_is, seed);
}

json make_manifest(const std::string& command, const json& config, std::uint64_t seed,
                   const std::vector<std::string>& outputs) {
    return json{{"command", command},
                {"version", kVersion},
                {"seed", seed},
                {"config", config},
                {"outputs", outputs},
                {"libraries",
                 {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)}}}};
}

void write_manifest(const std::filesystem::path& dir, const json& manifest) {
    write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace ecmbq
