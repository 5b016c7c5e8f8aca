#include "ecmbq/identifiability.hpp"

#include "ecmbq/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cstdio>
#include <tuple>

namespace ecmbq {

namespace {

constexpr double kLn2 = std::numbers::ln2;

double log_sech(double y) {
    const double a = std::abs(y);
    return kLn2 - a - std::log1p(std::exp(-2.0 * a));
}

double sech(double y) { return std::exp(log_sech(y)); }

// Peak centres sigma*tau_std in ln(omega) - mu coordinates.
Vector peak_centres(const EcmParams& p, const FrequencyStandardization& grid) {
    return (grid.sigma_omega * p.tau_std.array()).matrix();
}

void check_pair(const EcmParams& p, int i, int j) {
    if (i == j) throw ConfigError("JS divergence needs two distinct RC pairs");
    if (i < 0 || j < 0 || i >= p.n_pairs() || j >= p.n_pairs()) {
        throw ConfigError("RC pair index out of range");
    }
}

double sample_sech(double lambda, double c, double u) { return c + std::log(std::tan(0.5 * kPi * u)) / lambda; }

// The pair's two peaks plus a broad sech centred between them, each peak weighted 1/4.
struct SechProposal {
    double li, ci, lj, cj, cmid;

    SechProposal(double lambda_i, double c_i, double lambda_j, double c_j, double sigma, double tau_i, double tau_j)
        : li(lambda_i), ci(c_i), lj(lambda_j), cj(c_j) {
        const double delta = sigma * std::abs(lambda_j * tau_j - lambda_i * tau_i);
        cmid = sigma * lambda_i * tau_i + 0.5 * delta;
    }

    double log_pdf(double x) const {
        const double a = log_scaled_sech_pdf(x, li, ci) - 2.0 * kLn2;
        const double b = log_scaled_sech_pdf(x, lj, cj) - 2.0 * kLn2;
        const double c = log_scaled_sech_pdf(x, 0.5, cmid) - kLn2;
        return log_add(log_add(a, b), c);
    }

    double draw(Rng& rng) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double pick = unif(rng);
        double u = unif(rng);
        while (u <= 0.0) u = unif(rng);
        if (pick < 0.25) return sample_sech(li, ci, u);
        if (pick < 0.5) return sample_sech(lj, cj, u);
        return sample_sech(0.5, cmid, u);
    }
};

std::pair<int, int> ordered(const EcmParams& p, int i, int j) {
    if (p.tau_std[i] > p.tau_std[j]) std::swap(i, j);
    return {i, j};
}

}  // namespace

double x_csch_x(double x) {
    const double a = std::abs(x);
    if (a < 1e-4) return 1.0 - a * a / 6.0;
    if (a > 700.0) return 0.0;
    return a / std::sinh(a);
}

double snr_overlap_term(const Vector& lambda, const Vector& centres) {
    double out = lambda.squaredNorm();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        for (Eigen::Index j = i + 1; j < lambda.size(); ++j) {
            out += 2.0 * lambda[i] * lambda[j] * x_csch_x(centres[i] - centres[j]);
        }
    }
    return out;
}

double snr_analytic(const EcmParams& p, const FrequencyStandardization& grid, double log_sigma2, double a, double b) {
    if (!(b > a)) throw InvalidGrid("SNR window needs max ln(omega) > min ln(omega)");
    const PhysicalParams phys = to_physical(p, grid);
    const double width = b - a;
    const double scale = phys.R_total * (1.0 - phys.r_0);
    const double mean = kPi * scale / (2.0 * width);
    const double second = scale * scale * snr_overlap_term(phys.lambda, peak_centres(p, grid)) / (2.0 * width);
    const double var = second - mean * mean;
    if (!(var > 0.0)) {
        throw InvalidGrid("frequency window too narrow for the infinite-domain moments (variance " +
                          std::to_string(var) + ")");
    }
    return std::log(var) - log_sigma2;
}

double snr_analytic(const EcmParams& p, const FrequencyStandardization& grid, double log_sigma2) {
    const Vector lw = grid.log_omega();
    return snr_analytic(p, grid, log_sigma2, lw.minCoeff(), lw.maxCoeff());
}

double log_scaled_sech_pdf(double x, double lambda, double c) {
    return std::log(lambda / kPi) + log_sech(lambda * (x - c));
}

double js_divergence(const EcmParams& p, const FrequencyStandardization& grid, int i, int j, long n_is,
                     std::uint64_t seed) {
    check_pair(p, i, j);
    if (n_is < 10000) throw ConfigError("JS importance sampling needs at least 1e4 samples");
    std::tie(i, j) = ordered(p, i, j);
    const PhysicalParams phys = to_physical(p, grid);
    const Vector c = peak_centres(p, grid);
    const double li = phys.lambda[i];
    const double lj = phys.lambda[j];
    const SechProposal g(li, c[i], lj, c[j], grid.sigma_omega, p.tau_std[i], p.tau_std[j]);

    Rng rng(seed);
    double num = 0.0;
    double den = 0.0;
    for (long s = 0; s < n_is; ++s) {
        const double x = g.draw(rng);
        const double lg = g.log_pdf(x);
        const double lpi = log_scaled_sech_pdf(x, li, c[i]);
        const double lpj = log_scaled_sech_pdf(x, lj, c[j]);
        const double lm = log_add(lpi, lpj) - kLn2;
        const double wi = std::exp(lpi - lg);
        const double wj = std::exp(lpj - lg);
        num += 0.5 * (wi * (lpi - lm) + wj * (lpj - lm));
        den += 0.5 * (wi + wj);
    }
    return den > 0.0 ? num / den : 0.0;
}

double rectified_mean(double mean, double s2) {
    if (!(s2 > 0.0)) return std::max(mean, 0.0);
    const double s = std::sqrt(s2);
    const double t = mean / s;
    const double cdf = 0.5 * std::erfc(-t / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * t * t) / std::sqrt(2.0 * kPi);
    return mean * cdf + s * pdf;
}

double js_noisy(const EcmParams& p, const FrequencyStandardization& grid, int i, int j, const NoisePrior& noise,
                long n_is, std::uint64_t seed, int n_noise) {
    check_pair(p, i, j);
    if (n_is < 10000) throw ConfigError("JS importance sampling needs at least 1e4 samples");
    if (!(noise.sigma_sigma >= 0.0) || !std::isfinite(noise.mu_sigma) || n_noise < 1) {
        throw ConfigError("invalid log-normal noise prior");
    }
    std::tie(i, j) = ordered(p, i, j);
    const PhysicalParams phys = to_physical(p, grid);
    const Vector c = peak_centres(p, grid);
    const double li = phys.lambda[i];
    const double lj = phys.lambda[j];
    const Vector lw = grid.log_omega();
    const double xa = lw.minCoeff() - grid.mu_omega;
    const double xb = lw.maxCoeff() - grid.mu_omega;
    const SechProposal g(li, c[i], lj, c[j], grid.sigma_omega, p.tau_std[i], p.tau_std[j]);

    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // Stratified draws of the noise variance.
    const boost::math::normal_distribution<double> stdn;
    std::vector<double> s2(static_cast<std::size_t>(n_noise));
    for (int k = 0; k < n_noise; ++k) {
        double u = (k + unif(rng)) / n_noise;
        u = std::clamp(u, 1e-12, 1.0 - 1e-12);
        s2[static_cast<std::size_t>(k)] =
            std::exp(noise.mu_sigma + noise.sigma_sigma * boost::math::quantile(stdn, u));
    }
    auto marginal = [&](double x, double lambda, double centre) {
        const double mean = std::exp(log_scaled_sech_pdf(x, lambda, centre));
        double acc = 0.0;
        for (double v : s2) acc += rectified_mean(mean, v);
        return acc / static_cast<double>(s2.size());
    };

    const double log_unif = -std::log(xb - xa);
    std::vector<double> pi_w(static_cast<std::size_t>(n_is));
    std::vector<double> pj_w(static_cast<std::size_t>(n_is));
    double zi = 0.0;
    double zj = 0.0;
    for (long s = 0; s < n_is; ++s) {
        const bool from_uniform = unif(rng) < 0.5;
        const double x = from_uniform ? xa + (xb - xa) * unif(rng) : g.draw(rng);
        double lq = g.log_pdf(x) - kLn2;
        if (x >= xa && x <= xb) lq = log_add(lq, log_unif - kLn2);
        double a = 0.0;
        double b = 0.0;
        if (x >= xa && x <= xb) {
            const double inv_q = std::exp(-lq);
            a = marginal(x, li, c[i]) * inv_q;
            b = marginal(x, lj, c[j]) * inv_q;
        }
        pi_w[static_cast<std::size_t>(s)] = a;
        pj_w[static_cast<std::size_t>(s)] = b;
        zi += a;
        zj += b;
    }
    if (!(zi > 0.0) || !(zj > 0.0)) throw DegenerateWeights("noisy peak density has no mass in the window");
    zi /= static_cast<double>(n_is);
    zj /= static_cast<double>(n_is);

    double num = 0.0;
    double den = 0.0;
    for (std::size_t s = 0; s < pi_w.size(); ++s) {
        const double a = pi_w[s] / zi;
        const double b = pj_w[s] / zj;
        if (a + b <= 0.0) continue;
        const double m = 0.5 * (a + b);
        double term = 0.0;
        if (a > 0.0) term += a * std::log(a / m);
        if (b > 0.0) term += b * std::log(b / m);
        num += 0.5 * term;
        den += m;
    }
    return den > 0.0 ? num / den : 0.0;
}

NoisePrior noise_prior_for(const EcmParams& p, const FrequencyStandardization& grid, double log_sigma2,
                           double sigma_sigma) {
    const PhysicalParams phys = to_physical(p, grid);
    return NoisePrior{log_sigma2 - 2.0 * std::log(phys.R_im), sigma_sigma};
}

IdentityReport sech_identities_check() {
    using boost::math::quadrature::gauss_kronrod;
    auto integrate = [](auto f) { return gauss_kronrod<double, 61>::integrate(f, -50.0, 50.0, 20, 1e-15); };
    IdentityReport out;
    auto add = [&](std::string name, double numeric, double expected, std::string note = {}) {
        out.checks.push_back({std::move(name), numeric, expected, std::abs(numeric - expected), std::move(note)});
    };

    add("int sech(x)", integrate([](double x) { return sech(x); }), kPi);

    const double a2 = 0.0;
    const double b2 = 2.0;
    const double scaled = integrate([&](double x) { return sech((x - a2) / b2); });
    const double dev_mul = std::abs(scaled - kPi * b2);
    const double dev_div = std::abs(scaled - kPi / b2);
    out.scaled_form_match = dev_mul < dev_div ? "pi*b" : "pi/b";
    add("int sech((x-a)/b), a=0, b=2", scaled, kPi * b2,
        "alternative form pi/b = " + std::to_string(kPi / b2) + " deviates by " + std::to_string(dev_div) +
            "; numeric value matches " + out.scaled_form_match);

    add("int sech(x) ln sech(x)", integrate([](double x) { return sech(x) * log_sech(x); }), -kPi * kLn2);
    for (double a : {0.5, 1.0, 3.0}) {
        char name[64];
        std::snprintf(name, sizeof name, "int sech(x) sech(x-a), a=%g", a);
        add(name, integrate([a](double x) { return sech(x) * sech(x - a); }), 2.0 * x_csch_x(a));
    }
    add("int sech(x)^2", integrate([](double x) { return sech(x) * sech(x); }), 2.0);
    return out;
}

json IdentityReport::to_json() const {
    json arr = json::array();
    for (const auto& c : checks) {
        json j{{"name", c.name}, {"numeric", c.numeric}, {"expected", c.expected}, {"deviation", c.deviation}};
        if (!c.note.empty()) j["note"] = c.note;
        arr.push_back(std::move(j));
    }
    return json{{"checks", std::move(arr)}, {"scaled_form_match", scaled_form_match}};
}

namespace {

json pair_map(const std::map<std::pair<int, int>, double>& m) {
    json arr = json::array();
    for (const auto& [k, v] : m) arr.push_back(json{{"i", k.first + 1}, {"j", k.second + 1}, {"value", v}});
    return arr;
}

}  // namespace

json IdentifiabilityReport::to_json() const {
    json out{{"m", m},
             {"snr", snr},
             {"js", pair_map(js_pairs)},
             {"delta_tau", pair_map(delta_tau)}};
    if (!js_noisy_pairs.empty()) out["js_noisy"] = pair_map(js_noisy_pairs);
    return out;
}

IdentifiabilityReport identifiability_report(const EcmParams& p, const FrequencyStandardization& grid,
                                             double log_sigma2, long n_is, std::uint64_t seed, bool with_noisy) {
    IdentifiabilityReport out;
    out.m = grid.omega_std.size();
    out.snr = snr_analytic(p, grid, log_sigma2);
    const NoisePrior noise = noise_prior_for(p, grid, log_sigma2);
    for (int i = 0; i < p.n_pairs(); ++i) {
        for (int j = i + 1; j < p.n_pairs(); ++j) {
            const std::uint64_t s = seed + static_cast<std::uint64_t>(i * p.n_pairs() + j);
            out.delta_tau[{i, j}] = grid.sigma_omega * std::abs(p.tau_std[i] - p.tau_std[j]);
            out.js_pairs[{i, j}] = js_divergence(p, grid, i, j, n_is, s);
            if (with_noisy) out.js_noisy_pairs[{i, j}] = js_noisy(p, grid, i, j, noise, std::max(10000L, n_is / 10), s);
        }
    }
    return out;
}

}  // namespace ecmbq
