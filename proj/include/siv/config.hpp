#pragma once

// Structured-text run configuration.
//
//   # comment
//   command = protocol
//   [params]
//   lambda_g = 48 GHz
//   [protocol]
//   variant = cpt_scan
//   sweep = [-40, -39.5, 40] MHz
//
// Every quantity carries a unit suffix. Frequencies of energies and rates
// (GHz, MHz, ...) are converted to angular frequency; `rad/s` is taken as is.
// Parsing collects every violation before failing.

#include <string>
#include <vector>

#include "siv/phonon.hpp"
#include "siv/photophysics.hpp"
#include "siv/protocols.hpp"
#include "siv/spectrum.hpp"

namespace siv {

enum class Command { spectrum, zeeman_map, rates, protocol, photophysics };
enum class OutputFormat { csv, json };

const char* to_string(Command c);
const char* to_string(OutputFormat f);

struct PhononSettings {
    PhononMode mode = PhononMode::as_written;
    double chi_rho = 0.0;               ///< s^2, used when calibrate_t1 is 0
    double cutoff = 0.0;                ///< rad/s
    double calibrate_t1 = 0.0;          ///< s; > 0 derives chi_rho by calibration
    double calibrate_splitting = angular(48e9);
    double calibrate_temperature = 5.0;

    PhononModel model() const;
};

/// One `key = value` line in canonical form.
struct ConfigEntry {
    std::string section;
    std::string key;
    std::string value;
    bool user_set = false;
};

struct RunConfig {
    Command command = Command::spectrum;
    OutputFormat format = OutputFormat::csv;
    std::string output_dir = ".";

    SivParameters params{};
    Vector3 field_axis{0.0, 0.0, 1.0};  ///< crystal frame, need not be normalised
    double field_magnitude = 0.0;       ///< T
    PhononSettings phonon{};

    bool nuclear = false;  ///< spectrum: include the nuclear spin
    double zeeman_b_max = 7.0;
    int zeeman_steps = 50;
    std::vector<double> rate_splittings{angular(48e9)};
    std::vector<double> rate_temperatures{5.0};

    ProtocolConfig protocol{};
    double cpt_target_fwhm = 0.0;  ///< Hz; > 0 tunes the CPT Rabi frequency first

    PhotophysicsInput photophysics{};

    /// Every key of the relevant sections, defaults included, in canonical order.
    std::vector<ConfigEntry> entries;

    MagneticField field() const { return MagneticField::along(field_axis, field_magnitude); }
    /// Protocol settings with the shared parameters, field and phonon model applied.
    ProtocolConfig protocol_config() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

/// Re-parses cfg with one key (`section.key`) replaced by `value`.
RunConfig with_override(const RunConfig& cfg, const std::string& key_path, const std::string& value);

/// FNV-1a hash of the serialized configuration, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

}  // namespace siv
