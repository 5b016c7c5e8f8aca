#pragma once

#include "ecmbq/numeric.hpp"

#include <complex>
#include <vector>

namespace ecmbq {

// Standardised log angular frequency grid. Frequencies are held as ln(omega)
// internally; Hz only appears at the dataset I/O boundary.
struct FrequencyStandardization {
    double mu_omega = 0.0;     // mean of ln(omega)
    double sigma_omega = 1.0;  // population std of ln(omega)
    Vector omega_std;          // (ln omega - mu) / sigma

    Vector log_omega() const { return (omega_std.array() * sigma_omega + mu_omega).matrix(); }
};

// Unconstrained canonical parameters of an N-pair RC circuit.
//   r_total = ln R_total,  r_i = exp(-exp(r_prime_i)),  ln(omega tau_i) = sigma*(omega_std - tau_std_i)
struct EcmParams {
    double r_total = 0.0;
    Vector r_prime;
    Vector tau_std;

    int n_pairs() const { return static_cast<int>(r_prime.size()); }
    bool valid() const;

    // Flat layout [r_total, r'_1..r'_N, tau_1..tau_N].
    Vector to_vector() const;
    static EcmParams from_vector(const Vector& v, int n_pairs);
};

struct PhysicalParams {
    double R_total = 0.0;
    double R_0 = 0.0;
    double r_0 = 0.0;
    Vector r;  // dimensionless r_i
    Vector R;
    Vector tau;
    Vector C;
    Vector lambda;
    double R_re = 0.0;
    double R_im = 0.0;
};

struct Impedance {
    Vector re;
    Vector im;  // positive semicircle magnitude, i.e. -Im[Z] in Nyquist convention
};

// Dimensionless resistance fraction for an unconstrained r'.
inline double resistance_fraction(double r_prime) { return std::exp(-std::exp(r_prime)); }
inline double inverse_resistance_fraction(double r) { return std::log(-std::log(r)); }

// Throws DegenerateParams when sum r_i >= 1 - 1e-12 (R_0 would not be positive).
PhysicalParams to_physical(const EcmParams& p, const FrequencyStandardization& grid);

// Canonical tanh / sech-mixture evaluation at every grid frequency.
Impedance impedance(const EcmParams& p, const FrequencyStandardization& grid);

// Textbook Z = R_0 + sum R_i / (1 + j omega C_i R_i); used as the equivalence oracle.
std::vector<std::complex<double>> impedance_direct(double R_0, const Vector& R, const Vector& C,
                                                   const Vector& omega);

}  // namespace ecmbq
