#pragma once

// From a measured pi-pulse power to the transition dipole moment, the
// Einstein A coefficient, the radiative lifetime and the quantum efficiency.
// Inputs and outputs carry compile-time SI dimensions (siv::units).

#include <string>

#include "siv/units.hpp"

namespace siv {

struct FocusModel {
    units::Length d_focus{862e-9};   ///< lateral focal FWHM inside diamond
    double t_transmission = 0.68;    ///< optical transmission correction
    double s_field_ratio = 0.57;     ///< focal field ratio diamond / air
    double n_index = 2.4;

    void validate() const;
};

struct PulseTrain {
    units::Power p_avg{817e-9};
    units::Time rep_period{41.40137940003116e-9};  ///< time per pulse
    units::Time w_pulse{12e-12};                    ///< intensity FWHM

    void validate() const;
};

struct DipoleResult {
    units::FieldTimeIntegral integrated_field{};
    units::DipoleMoment mu{};
    double mu_debye = 0.0;
    units::Rate a21{};
    units::Time tau0{};
    double phi = 0.0;
    std::string warning;  ///< set when phi exceeds 1
};

/// Gaussian sigma of a beam with intensity FWHM d_focus.
units::Length focal_sigma(units::Length d_focus);

/// On-axis intensity of a Gaussian beam of total power p_avg.
units::Intensity peak_intensity(units::Power p_avg, units::Length sigma);

/// Time-integrated field of one pulse with a two-sided exponential intensity
/// profile exp(-2 ln2 |t| / w_pulse).
units::FieldTimeIntegral integrated_field(const PulseTrain& train, const FocusModel& focus);

/// Dipole moment for which a pulse of average power p_pi is a pi pulse.
units::DipoleMoment dipole_moment(units::Power p_pi, const PulseTrain& train, const FocusModel& focus);

/// Inverse: the average power that makes a pi pulse for dipole moment mu.
units::Power pi_pulse_power(units::DipoleMoment mu, const PulseTrain& train, const FocusModel& focus);

units::Rate einstein_a(units::Frequency nu, units::DipoleMoment mu);
/// 1 / a21; throws InvalidParameter when a21 is zero.
units::Time radiative_lifetime(units::Rate a21);
double quantum_efficiency(units::Time tau_fl, units::Time tau0);

/// Rep period for which the chain yields mu_target at power p_pi.
units::Time solve_rep_period(units::DipoleMoment mu_target, units::Power p_pi, const PulseTrain& train,
                             const FocusModel& focus);
/// ZPL frequency for which mu gives the radiative lifetime tau0.
units::Frequency solve_frequency(units::DipoleMoment mu, units::Time tau0);

struct PhotophysicsInput {
    units::Power p_pi{817e-9};
    PulseTrain train{};
    FocusModel focus{};
    units::Time tau_fl{1.85e-9};
    units::Frequency nu{406.819e12};
};

DipoleResult photophysics_chain(const PhotophysicsInput& in);

inline constexpr double kDefaultZplFrequency = 406.819e12;  // Hz, 736.9 nm

}  // namespace siv
