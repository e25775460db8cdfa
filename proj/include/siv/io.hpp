#pragma once

// Text serialisation of results. CSV numbers carry 17 significant digits so
// that every double survives a round trip; JSON keeps insertion order.

#include <string>
#include <utility>
#include <vector>

#include "siv/fit.hpp"
#include "siv/phonon.hpp"
#include "siv/photophysics.hpp"
#include "siv/protocols.hpp"
#include "siv/spectrum.hpp"

namespace siv {

/// printf("%.17g") of v.
std::string csv_number(double v);

std::string transition_table_csv(const TransitionTable& table, double nu0,
                                  const std::vector<std::string>& basis);
std::string transition_table_json(const TransitionTable& table, double nu0,
                                  const std::vector<std::string>& basis);

std::string zeeman_map_csv(const std::vector<ZeemanPoint>& map, double nu0);
std::string zeeman_map_json(const std::vector<ZeemanPoint>& map, double nu0);

struct RateRow {
    double splitting = 0.0;  ///< rad/s
    double temperature = 0.0;
    RatePair rates;
    double t1 = 0.0;
};
std::string rates_csv(const std::vector<RateRow>& rows, const PhononModel& model);
std::string rates_json(const std::vector<RateRow>& rows, const PhononModel& model);

std::string protocol_csv(const ProtocolResult& r);
/// Fit, derived values and warnings; the trace too when include_trace is set.
std::string protocol_json(const ProtocolResult& r, bool include_trace);

std::string fit_json(const FitResult& f);

std::string photophysics_csv(const DipoleResult& d);
std::string photophysics_json(const DipoleResult& d);

/// Named scalar table with a header row.
std::string key_value_csv(const std::vector<std::pair<std::string, double>>& rows);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace siv
