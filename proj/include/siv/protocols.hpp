#pragma once

// Scripted pulse sequences over the Lindblad engine, one runner per
// experiment type, each producing a trace and (where meaningful) a fit.
//
// Optical level naming follows the four-level picture: 1, 2 are the lower and
// upper ground branches, 3, 4 the lower and upper excited branches, and the
// lines are A = 1-4, B = 2-4, C = 1-3, D = 2-3.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "siv/fit.hpp"
#include "siv/lindblad.hpp"
#include "siv/phonon.hpp"
#include "siv/spectrum.hpp"

namespace siv {

enum class ProtocolVariant {
    optical_pumping_t1,
    spin_t1,
    cpt_scan,
    odmr_scan,
    mw_rabi,
    mw_ramsey,
    optical_rabi,
    optical_ramsey,
    raman_rabi,
    raman_ramsey,
    mollow
};

const char* to_string(ProtocolVariant v);
ProtocolVariant protocol_variant_from_string(const std::string& s);
const std::vector<ProtocolVariant>& all_protocol_variants();

/// Units of `sweep` per variant: delays (s) for the T1 and Ramsey runners,
/// two-photon / MW / drive detunings (rad/s) for cpt_scan, odmr_scan and
/// mollow, durations (s) for the Rabi runners except optical_rabi, which
/// sweeps pulse area (rad).
struct ProtocolConfig {
    ProtocolVariant variant = ProtocolVariant::optical_pumping_t1;
    SivParameters params{};
    MagneticField field{};
    PhononModel phonon{};
    double temperature = 5.0;  ///< K
    std::vector<double> sweep;

    double rabi = 0.0;             ///< rad/s, primary field
    double rabi_2 = 0.0;           ///< rad/s, second field (cpt, Raman); 0 copies rabi
    double detuning = 0.0;         ///< rad/s, Ramsey detuning or Raman one-photon detuning
    double pulse_duration = 0.0;   ///< s, pump pulse (T1 runners) or MW pulse (odmr, 0 = pi pulse)
    double readout_window = 2e-9;  ///< s, fluorescence integration window of the read pulse
    double pulse_width = 12e-12;   ///< s, intensity FWHM of picosecond pulses
    double spin_dephasing = 0.0;   ///< rad/s, ground-spin pure dephasing rate
    double laser_linewidth = 0.0;  ///< rad/s, relative linewidth of the two CPT lasers
    double excited_t2_lower = 1044e-12;  ///< s, target coherence time of level 3
    double excited_t2_upper = 398e-12;   ///< s, target coherence time of level 4
    std::string transition = "C";  ///< optical line for optical_rabi / optical_ramsey
    std::string pump_line = "B1";  ///< Zeeman line labels for spin_t1
    std::string read_line = "B1";
    bool hyperfine = true;         ///< odmr_scan: include the nuclear spin
    double sim_time = 20e-9;       ///< s, mollow trace length
    double time_step = 10e-12;     ///< s, mollow sampling step
    double tol = 1e-9;

    void validate() const;
};

/// Reference settings for each variant.
ProtocolConfig default_protocol_config(ProtocolVariant v);

struct ProtocolResult {
    ProtocolVariant variant = ProtocolVariant::optical_pumping_t1;
    std::string x_name;
    std::string y_name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::pair<std::string, std::vector<double>>> extra_columns;
    std::optional<FitResult> fit;
    std::vector<std::pair<std::string, double>> derived;  ///< in insertion order
    std::vector<std::string> warnings;

    /// Throws InvalidParameter when the name is absent.
    double value(const std::string& name) const;
};

ProtocolResult run_optical_pumping_t1(const ProtocolConfig& cfg);
ProtocolResult run_spin_t1(const ProtocolConfig& cfg);
ProtocolResult run_cpt_scan(const ProtocolConfig& cfg);
ProtocolResult run_odmr_scan(const ProtocolConfig& cfg);
ProtocolResult run_mw_rabi(const ProtocolConfig& cfg);
ProtocolResult run_mw_ramsey(const ProtocolConfig& cfg);
ProtocolResult run_optical_rabi(const ProtocolConfig& cfg);
ProtocolResult run_optical_ramsey(const ProtocolConfig& cfg);
ProtocolResult run_raman_rabi(const ProtocolConfig& cfg);
ProtocolResult run_raman_ramsey(const ProtocolConfig& cfg);
ProtocolResult run_mollow(const ProtocolConfig& cfg);

ProtocolResult run_protocol(const ProtocolConfig& cfg);

/// Excited-manifold rates that give the requested optical coherence times:
/// pure dephasing of both excited levels and a 4 -> 3 relaxation channel.
struct ExcitedRates {
    double pure_dephasing = 0.0;  ///< coherence decay added to both levels, 1/s
    double gamma_43 = 0.0;        ///< 1/s
};
ExcitedRates excited_rates_for_t2(double t2_lower, double t2_upper, double gamma_rad);

/// Phonon jump channels between the two orbital branches of a ground
/// eigensystem (levels [0, n/2) and [n/2, n)). Each level leaves for the other
/// branch at exactly gamma_+ (upwards) or gamma_- (downwards), distributed
/// over the target levels by orbital_flip_weight.
std::vector<CollapseChannel> phonon_channels(const EigenSystem& ground, const PhononModel& model,
                                             double temp);

/// Equal CPT Rabi frequency for which the dip width without dephasing or
/// laser linewidth equals target_fwhm (Hz).
double tune_cpt_rabi(ProtocolConfig cfg, double target_fwhm);

/// Number of local maxima of ys whose prominence exceeds `prominence`.
int count_peaks(const std::vector<double>& ys, double prominence);

}  // namespace siv
