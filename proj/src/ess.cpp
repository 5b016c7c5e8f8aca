#include "ecmbq/ess.hpp"

#include "ecmbq/errors.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace ecmbq {

json EssConfig::to_json() const {
    return json{{"n_steps", n_steps}, {"burn_in", burn_in}, {"max_evals", max_evals}, {"seed", seed}, {"max_shrink", max_shrink}};
}

EssChain run_ess(const LogLikelihoodFn& loglik, const GaussianPrior& prior, const EssConfig& cfg) {
    if (cfg.n_steps < 1) throw ConfigError("ESS needs at least one step");
    if (cfg.burn_in >= cfg.n_steps) throw ConfigError("burn-in consumes the whole chain");
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    Rng rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int d = prior.dim();
    const Vector& mu = prior.mean();

    EssChain chain;
    std::vector<Vector> states;
    std::vector<double> lls;
    std::vector<long> evals;
    std::vector<double> times;

    Vector x = prior.sample(1, rng).row(0).transpose();
    double ll = loglik(x);
    chain.n_evals = 1;
    auto exhausted = [&] { return cfg.max_evals > 0 && chain.n_evals >= cfg.max_evals; };

    for (long step = 0; step < cfg.n_steps && !exhausted(); ++step) {
        const Vector nu = prior.sample(1, rng).row(0).transpose() - mu;
        const Vector x0 = x - mu;
        const double log_y = ll + std::log(unif(rng));
        double t = 2.0 * kPi * unif(rng);
        double lo = t - 2.0 * kPi;
        double hi = t;
        int shrinks = 0;
        bool accepted = false;
        while (!exhausted()) {
            const Vector prop = mu + x0 * std::cos(t) + nu * std::sin(t);
            const double lp = loglik(prop);
            ++chain.n_evals;
            if (lp > log_y) {
                x = prop;
                ll = lp;
                accepted = true;
                break;
            }
            if (++shrinks >= cfg.max_shrink) break;
            if (t < 0.0) {
                lo = t;
            } else {
                hi = t;
            }
            t = lo + (hi - lo) * unif(rng);
        }
        chain.max_shrinks = std::max(chain.max_shrinks, shrinks);
        if (!accepted && !exhausted()) ++chain.abandoned_steps;
        states.push_back(x);
        lls.push_back(ll);
        evals.push_back(chain.n_evals);
        times.push_back(elapsed());
    }

    const auto taken = static_cast<long>(states.size());
    const long burn = std::min(cfg.burn_in < 0 ? taken / 10 : cfg.burn_in, std::max(0L, taken - 1));
    const long kept = taken - burn;
    chain.samples.resize(kept, d);
    chain.log_liks.resize(kept);
    for (long k = 0; k < kept; ++k) {
        const auto src = static_cast<std::size_t>(burn + k);
        chain.samples.row(k) = states[src].transpose();
        chain.log_liks[k] = lls[src];
        chain.evals_at.push_back(evals[src]);
        chain.time_at.push_back(times[src]);
    }
    return chain;
}

std::vector<CurveRow> elpd_checkpoints(const EssChain& chain, const PointwiseLogLik& pointwise,
                                       std::vector<long> schedule) {
    std::sort(schedule.begin(), schedule.end());
    schedule.erase(std::unique(schedule.begin(), schedule.end()), schedule.end());
    std::vector<CurveRow> rows;
    for (long budget : schedule) {
        const auto it = std::upper_bound(chain.evals_at.begin(), chain.evals_at.end(), budget);
        const auto n = static_cast<Eigen::Index>(it - chain.evals_at.begin());
        if (n == 0) continue;
        CurveRow row;
        row.n_evals = chain.evals_at[static_cast<std::size_t>(n - 1)];
        row.wall_time_s = chain.time_at[static_cast<std::size_t>(n - 1)];
        row.n_samples = n;
        row.value = elpd(chain.samples.topRows(n), Vector(), pointwise);
        rows.push_back(row);
    }
    return rows;
}

std::string curve_csv(const std::vector<CurveRow>& rows) {
    std::ostringstream out;
    out << "iter,n_evals,wall_time_s,lem,lev\n";
    char buf[160];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%ld,%.6f,%.17g,\n", i + 1, rows[i].n_evals, rows[i].wall_time_s,
                      rows[i].value);
        out << buf;
    }
    return out.str();
}

}  // namespace ecmbq
