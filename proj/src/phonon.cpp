#include "siv/phonon.hpp"

#include <cmath>
#include <limits>

#include "siv/constants.hpp"
#include "siv/errors.hpp"

namespace siv {

namespace {

void check_inputs(double delta, double temp) {
    if (!std::isfinite(delta) || delta <= 0) throw InvalidParameter("phonon splitting delta must be > 0");
    if (!std::isfinite(temp) || temp < 0) throw InvalidParameter("temperature must be >= 0");
}

double prefactor(const PhononModel& m, double delta) {
    if (delta < m.cutoff) return 0.0;
    return two_pi * m.chi_rho * delta * delta * delta;
}

// Bose occupation 1/(e^x - 1) and e^{-x}, both well defined as x -> infinity.
double bose(double x) { return 1.0 / std::expm1(x); }

// gamma_+ + gamma_- for unit chi_rho.
double unit_total(PhononMode mode, double delta, double temp) {
    PhononModel unit{1.0, mode, 0.0};
    return gamma_plus(unit, delta, temp) + gamma_minus(unit, delta, temp);
}

}  // namespace

void PhononModel::validate() const {
    if (!std::isfinite(chi_rho) || chi_rho < 0) throw InvalidParameter("chi_rho must be >= 0");
    if (!std::isfinite(cutoff) || cutoff < 0) throw InvalidParameter("phonon cutoff must be >= 0");
}

double phonon_energy_ratio(double delta, double temp) {
    return PhysicalConstants::hbar * delta / (PhysicalConstants::k_B * temp);
}

double gamma_plus(const PhononModel& model, double delta, double temp) {
    model.validate();
    check_inputs(delta, temp);
    if (temp == 0) return 0.0;
    return prefactor(model, delta) * bose(phonon_energy_ratio(delta, temp));
}

double gamma_minus(const PhononModel& model, double delta, double temp) {
    model.validate();
    check_inputs(delta, temp);
    const double pre = prefactor(model, delta);
    if (model.mode == PhononMode::as_written) {
        if (temp == 0) return 0.0;
        return pre * std::exp(-phonon_energy_ratio(delta, temp));
    }
    if (temp == 0) return pre;
    // (n + 1) = e^x / (e^x - 1) = 1 / (1 - e^{-x})
    return pre / -std::expm1(-phonon_energy_ratio(delta, temp));
}

RatePair rates(const PhononModel& model, double delta, double temp) {
    return {gamma_plus(model, delta, temp), gamma_minus(model, delta, temp)};
}

double orbital_t1(const PhononModel& model, double delta, double temp) {
    const auto r = rates(model, delta, temp);
    const double total = r.gamma_plus + r.gamma_minus;
    if (total == 0) return std::numeric_limits<double>::infinity();
    return 1.0 / total;
}

PhononModel calibrate(double delta, double temp, double t1_measured, PhononMode mode) {
    check_inputs(delta, temp);
    if (!(temp > 0)) throw InvalidParameter("calibration temperature must be > 0");
    if (!std::isfinite(t1_measured) || t1_measured <= 0) throw InvalidParameter("t1 must be > 0");
    const double total = unit_total(mode, delta, temp);
    if (!(total > 0)) throw NumericalError("phonon rates vanish at the calibration point");
    return PhononModel{1.0 / (t1_measured * total), mode, 0.0};
}

RateProfile rate_vs_splitting_profile(const PhononModel& model, double temp, double delta_min,
                                      double delta_max, int samples) {
    model.validate();
    if (!(temp > 0)) throw InvalidParameter("profile temperature must be > 0");
    if (!(delta_min > 0) || !(delta_max > delta_min)) throw InvalidParameter("invalid delta range");
    if (samples < 3) throw InvalidParameter("profile needs at least 3 samples");

    RateProfile out;
    const double lo = std::log(delta_min), hi = std::log(delta_max);
    for (int k = 0; k < samples; ++k) {
        const double d = std::exp(lo + (hi - lo) * k / (samples - 1));
        out.delta.push_back(d);
        out.gamma_plus.push_back(gamma_plus(model, d, temp));
    }

    // Golden-section search on log(delta); gamma_+ is unimodal.
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double u) { return gamma_plus(model, std::exp(u), temp); };
    double a = lo, b = hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-12 * std::max(1.0, std::abs(b))) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - phi * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + phi * (b - a); fd = f(d);
        }
    }
    out.peak_delta = std::exp(0.5 * (a + b));
    out.peak_rate = gamma_plus(model, out.peak_delta, temp);
    return out;
}

const char* to_string(PhononMode mode) {
    return mode == PhononMode::as_written ? "as-written" : "detailed-balance";
}

PhononMode phonon_mode_from_string(const std::string& s) {
    if (s == "as-written") return PhononMode::as_written;
    if (s == "detailed-balance") return PhononMode::detailed_balance;
    throw InvalidParameter("unknown phonon mode '" + s + "' (expected as-written|detailed-balance)");
}

}  // namespace siv
