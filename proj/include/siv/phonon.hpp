#pragma once

// First-order electron-phonon transition rates between the two orbital
// branches of a manifold split by delta. With a coupling |chi|^2 = chi*omega
// and a Debye density of states rho*omega^2, both rates share the prefactor
// 2*pi*chi_rho*delta^3; only the product chi_rho is ever needed.

#include <string>
#include <vector>

namespace siv {

enum class PhononMode {
    as_written,       ///< gamma_- = 2 pi chi_rho delta^3 exp(-x)
    detailed_balance  ///< gamma_- = gamma_+ exp(x)
};

struct PhononModel {
    double chi_rho = 0.0;  ///< s^2; 2 pi chi_rho delta^3 is a rate for delta in rad/s
    PhononMode mode = PhononMode::as_written;
    double cutoff = 0.0;   ///< rad/s; rates vanish for delta below this

    void validate() const;
};

struct RatePair {
    double gamma_plus = 0.0;
    double gamma_minus = 0.0;
};

/// hbar*delta / (k_B*T).
double phonon_energy_ratio(double delta, double temp);

double gamma_plus(const PhononModel& model, double delta, double temp);
double gamma_minus(const PhononModel& model, double delta, double temp);
RatePair rates(const PhononModel& model, double delta, double temp);

/// Population-imbalance relaxation time 1/(gamma_+ + gamma_-).
double orbital_t1(const PhononModel& model, double delta, double temp);

/// Closed-form chi_rho such that orbital_t1(result, delta, temp) == t1_measured.
PhononModel calibrate(double delta, double temp, double t1_measured,
                      PhononMode mode = PhononMode::as_written);

/// Upper bound on T2* set by population relaxation alone.
constexpr double coherence_bound(double t1) { return 2.0 * t1; }

struct RateProfile {
    std::vector<double> delta;       ///< rad/s, log-spaced
    std::vector<double> gamma_plus;  ///< 1/s
    double peak_delta = 0.0;         ///< golden-section maximiser of gamma_+
    double peak_rate = 0.0;
};

/// Samples gamma_+(delta) over [delta_min, delta_max] and locates its maximum.
RateProfile rate_vs_splitting_profile(const PhononModel& model, double temp, double delta_min,
                                      double delta_max, int samples);

const char* to_string(PhononMode mode);
PhononMode phonon_mode_from_string(const std::string& s);

}  // namespace siv
