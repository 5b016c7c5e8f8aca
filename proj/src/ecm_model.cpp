#include "ecmbq/ecm_model.hpp"

#include "ecmbq/errors.hpp"

#include <string>

namespace ecmbq {

bool EcmParams::valid() const {
    if (r_prime.size() < 1 || r_prime.size() != tau_std.size()) return false;
    if (!std::isfinite(r_total)) return false;
    return r_prime.allFinite() && tau_std.allFinite();
}

Vector EcmParams::to_vector() const {
    const int n = n_pairs();
    Vector v(1 + 2 * n);
    v[0] = r_total;
    v.segment(1, n) = r_prime;
    v.segment(1 + n, n) = tau_std;
    return v;
}

EcmParams EcmParams::from_vector(const Vector& v, int n_pairs) {
    EcmParams p;
    p.r_total = v[0];
    p.r_prime = v.segment(1, n_pairs);
    p.tau_std = v.segment(1 + n_pairs, n_pairs);
    return p;
}

PhysicalParams to_physical(const EcmParams& p, const FrequencyStandardization& grid) {
    if (!p.valid()) throw DegenerateParams("non-finite or mis-sized parameter vector");
    const int n = p.n_pairs();
    PhysicalParams out;
    out.r.resize(n);
    for (int i = 0; i < n; ++i) out.r[i] = resistance_fraction(p.r_prime[i]);
    const double r_sum = out.r.sum();
    if (r_sum >= 1.0 - 1e-12) {
        throw DegenerateParams("sum of r_i = " + std::to_string(r_sum) + " leaves no series resistance");
    }
    out.R_total = std::exp(p.r_total);
    out.r_0 = 1.0 - r_sum;
    out.R_0 = out.r_0 * out.R_total;
    out.R = out.r * out.R_total;
    // ln tau_i = -sigma*tau_std_i - mu
    out.tau = (-(grid.sigma_omega * p.tau_std.array()) - grid.mu_omega).exp().matrix();
    out.C = (out.tau.array() / out.R.array()).matrix();
    out.lambda = out.R / out.R.sum();
    out.R_re = out.R_total;
    out.R_im = 0.5 * kPi * out.R.sum();
    return out;
}

Impedance impedance(const EcmParams& p, const FrequencyStandardization& grid) {
    const PhysicalParams phys = to_physical(p, grid);
    const Eigen::Index m = grid.omega_std.size();
    Impedance z;
    z.re.setConstant(m, phys.r_0);
    z.im.setZero(m);
    for (int i = 0; i < p.n_pairs(); ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double x = grid.sigma_omega * (grid.omega_std[j] - p.tau_std[i]);  // ln(omega tau_i)
            z.re[j] += 0.5 * phys.r[i] * (1.0 - std::tanh(x));
            z.im[j] += phys.lambda[i] / kPi / std::cosh(x);
        }
    }
    z.re *= phys.R_re;
    z.im *= phys.R_im;
    return z;
}

std::vector<std::complex<double>> impedance_direct(double R_0, const Vector& R, const Vector& C,
                                                   const Vector& omega) {
    std::vector<std::complex<double>> z(static_cast<std::size_t>(omega.size()), {R_0, 0.0});
    for (Eigen::Index j = 0; j < omega.size(); ++j) {
        for (Eigen::Index i = 0; i < R.size(); ++i) {
            z[j] += R[i] / std::complex<double>(1.0, omega[j] * C[i] * R[i]);
        }
    }
    return z;
}

}  // namespace ecmbq
