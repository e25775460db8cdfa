#include "siv/io.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"

#include "siv/constants.hpp"
#include "siv/errors.hpp"

namespace siv {

using Json = nlohmann::ordered_json;

namespace {

std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? sep : "") + v[k];
    return out;
}

Json table_json(const TransitionTable& table, double nu0) {
    Json lines = Json::array();
    for (const auto& t : table.entries)
        lines.push_back({{"label", t.label},
                         {"ground_index", t.ground_index},
                         {"excited_index", t.excited_index},
                         {"frequency_hz", t.frequency},
                         {"offset_hz", t.frequency - nu0},
                         {"rel_intensity", t.rel_intensity}});
    return lines;
}

// Non-finite values have no JSON literal; they are written as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string transition_table_csv(const TransitionTable& table, double nu0,
                                 const std::vector<std::string>& basis) {
    std::string out = "# basis: " + join(basis, " ") + "\n";
    out += "label,ground_index,excited_index,frequency_hz,offset_hz,rel_intensity\n";
    for (const auto& t : table.entries)
        out += t.label + "," + std::to_string(t.ground_index) + "," + std::to_string(t.excited_index) + "," +
               csv_number(t.frequency) + "," + csv_number(t.frequency - nu0) + "," + csv_number(t.rel_intensity) +
               "\n";
    return out;
}

std::string transition_table_json(const TransitionTable& table, double nu0,
                                  const std::vector<std::string>& basis) {
    Json j;
    j["basis"] = basis;
    j["nu0_hz"] = nu0;
    j["lines"] = table_json(table, nu0);
    return j.dump(2) + "\n";
}

std::string zeeman_map_csv(const std::vector<ZeemanPoint>& map, double nu0) {
    std::string out = "b_t,label,ground_index,excited_index,frequency_hz,offset_hz,rel_intensity\n";
    for (const auto& p : map)
        for (const auto& t : p.table.entries)
            out += csv_number(p.b) + "," + t.label + "," + std::to_string(t.ground_index) + "," +
                   std::to_string(t.excited_index) + "," + csv_number(t.frequency) + "," +
                   csv_number(t.frequency - nu0) + "," + csv_number(t.rel_intensity) + "\n";
    return out;
}

std::string zeeman_map_json(const std::vector<ZeemanPoint>& map, double nu0) {
    Json points = Json::array();
    for (const auto& p : map) points.push_back({{"b_t", p.b}, {"lines", table_json(p.table, nu0)}});
    Json j;
    j["nu0_hz"] = nu0;
    j["points"] = points;
    return j.dump(2) + "\n";
}

std::string rates_csv(const std::vector<RateRow>& rows, const PhononModel& model) {
    std::string out = "# mode: " + std::string(to_string(model.mode)) + ", chi_rho_s2: " + csv_number(model.chi_rho) +
                      "\n";
    out += "splitting_hz,temperature_k,gamma_plus,gamma_minus,t1_s\n";
    for (const auto& r : rows)
        out += csv_number(hertz(r.splitting)) + "," + csv_number(r.temperature) + "," +
               csv_number(r.rates.gamma_plus) + "," + csv_number(r.rates.gamma_minus) + "," + csv_number(r.t1) + "\n";
    return out;
}

std::string rates_json(const std::vector<RateRow>& rows, const PhononModel& model) {
    Json j;
    j["mode"] = to_string(model.mode);
    j["chi_rho_s2"] = model.chi_rho;
    Json arr = Json::array();
    for (const auto& r : rows)
        arr.push_back({{"splitting_hz", hertz(r.splitting)},
                       {"temperature_k", r.temperature},
                       {"gamma_plus", r.rates.gamma_plus},
                       {"gamma_minus", r.rates.gamma_minus},
                       {"t1_s", number(r.t1)}});
    j["rows"] = arr;
    return j.dump(2) + "\n";
}

std::string protocol_csv(const ProtocolResult& r) {
    std::string out = r.x_name + "," + r.y_name;
    for (const auto& [name, col] : r.extra_columns) {
        if (col.size() != r.x.size()) throw DimensionMismatch("extra column '" + name + "' has the wrong length");
        out += "," + name;
    }
    out += "\n";
    for (std::size_t k = 0; k < r.x.size(); ++k) {
        out += csv_number(r.x[k]) + "," + csv_number(r.y[k]);
        for (const auto& [name, col] : r.extra_columns) out += "," + csv_number(col[k]);
        out += "\n";
    }
    return out;
}

std::string fit_json(const FitResult& f) {
    Json params = Json::object(), sigma = Json::object();
    for (std::size_t k = 0; k < f.names.size(); ++k) {
        params[f.names[k]] = number(f.params(static_cast<Eigen::Index>(k)));
        sigma[f.names[k]] = number(f.sigma(static_cast<Eigen::Index>(k)));
    }
    Json j;
    j["model"] = to_string(f.model);
    j["params"] = params;
    j["sigma"] = sigma;
    j["residual_norm"] = number(f.residual_norm);
    j["rms"] = number(f.rms);
    j["rel_residual"] = number(f.rel_residual);
    j["iterations"] = f.iterations;
    j["converged"] = f.converged;
    return j.dump(2);
}

std::string protocol_json(const ProtocolResult& r, bool include_trace) {
    Json j;
    j["variant"] = to_string(r.variant);
    Json derived = Json::object();
    for (const auto& [k, v] : r.derived) derived[k] = number(v);
    j["derived"] = derived;
    j["fit"] = r.fit ? Json::parse(fit_json(*r.fit)) : Json(nullptr);
    j["warnings"] = r.warnings;
    if (include_trace) {
        Json trace;
        trace[r.x_name] = r.x;
        trace[r.y_name] = r.y;
        for (const auto& [name, col] : r.extra_columns) trace[name] = col;
        j["trace"] = trace;
    }
    return j.dump(2) + "\n";
}

std::string photophysics_csv(const DipoleResult& d) {
    return key_value_csv({{"integrated_field_vs_per_m", d.integrated_field.value()},
                          {"mu_cm", d.mu.value()},
                          {"mu_debye", d.mu_debye},
                          {"a21_per_s", d.a21.value()},
                          {"tau0_s", d.tau0.value()},
                          {"phi", d.phi}});
}

std::string photophysics_json(const DipoleResult& d) {
    Json j;
    j["integrated_field_vs_per_m"] = d.integrated_field.value();
    j["mu_cm"] = d.mu.value();
    j["mu_debye"] = d.mu_debye;
    j["a21_per_s"] = d.a21.value();
    j["tau0_s"] = d.tau0.value();
    j["phi"] = d.phi;
    j["warning"] = d.warning;
    return j.dump(2) + "\n";
}

std::string key_value_csv(const std::vector<std::pair<std::string, double>>& rows) {
    std::string out = "name,value\n";
    for (const auto& [k, v] : rows) out += k + "," + csv_number(v) + "\n";
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
    if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace siv
