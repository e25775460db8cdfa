#include "siv/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "siv/errors.hpp"

namespace siv {

namespace {

enum class Kind { quantity, list, boolean, integer, word };
enum class Unit { none, angular, hertz, time, temperature, tesla, power, length, chi, angle, sweep };

using Value = std::variant<double, std::vector<double>, bool, long, std::string>;

struct UnitFactor {
    const char* name;
    double base;
    int exp10 = 0;  ///< decimal prefix, applied to the digits so the result is correctly rounded
};

const std::vector<UnitFactor>& unit_table(Unit u) {
    static const std::vector<UnitFactor> angular_u = {{"rad/s", 1.0},         {"Hz", two_pi},
                                                      {"kHz", two_pi, 3},     {"MHz", two_pi, 6},
                                                      {"GHz", two_pi, 9},     {"THz", two_pi, 12}};
    static const std::vector<UnitFactor> hertz_u = {
        {"Hz", 1.0}, {"kHz", 1.0, 3}, {"MHz", 1.0, 6}, {"GHz", 1.0, 9}, {"THz", 1.0, 12}};
    static const std::vector<UnitFactor> time_u = {{"s", 1.0},      {"ms", 1.0, -3},  {"us", 1.0, -6},
                                                   {"ns", 1.0, -9}, {"ps", 1.0, -12}, {"fs", 1.0, -15}};
    static const std::vector<UnitFactor> temp_u = {{"K", 1.0}, {"mK", 1.0, -3}};
    static const std::vector<UnitFactor> tesla_u = {{"T", 1.0}, {"mT", 1.0, -3}};
    static const std::vector<UnitFactor> power_u = {
        {"W", 1.0}, {"mW", 1.0, -3}, {"uW", 1.0, -6}, {"nW", 1.0, -9}, {"pW", 1.0, -12}};
    static const std::vector<UnitFactor> length_u = {{"m", 1.0}, {"mm", 1.0, -3}, {"um", 1.0, -6}, {"nm", 1.0, -9}};
    static const std::vector<UnitFactor> chi_u = {{"s^2", 1.0}};
    static const std::vector<UnitFactor> angle_u = {{"rad", 1.0}, {"pi", pi}, {"deg", pi / 180.0}};
    static const std::vector<UnitFactor> none_u = {};
    switch (u) {
        case Unit::angular: return angular_u;
        case Unit::hertz: return hertz_u;
        case Unit::time: return time_u;
        case Unit::temperature: return temp_u;
        case Unit::tesla: return tesla_u;
        case Unit::power: return power_u;
        case Unit::length: return length_u;
        case Unit::chi: return chi_u;
        case Unit::angle: return angle_u;
        default: return none_u;
    }
}

const char* unit_kind_name(Unit u) {
    switch (u) {
        case Unit::angular:
        case Unit::hertz: return "a frequency";
        case Unit::time: return "a time";
        case Unit::temperature: return "a temperature";
        case Unit::tesla: return "a magnetic field";
        case Unit::power: return "a power";
        case Unit::length: return "a length";
        case Unit::chi: return "s^2";
        case Unit::angle: return "an angle";
        default: return "dimensionless";
    }
}

// Canonical SI unit used when a default value is written out.
const char* canonical_unit(Unit u) {
    switch (u) {
        case Unit::angular: return "rad/s";
        case Unit::hertz: return "Hz";
        case Unit::time: return "s";
        case Unit::temperature: return "K";
        case Unit::tesla: return "T";
        case Unit::power: return "W";
        case Unit::length: return "m";
        case Unit::chi: return "s^2";
        case Unit::angle: return "rad";
        default: return "";
    }
}

Unit sweep_unit(ProtocolVariant v) {
    switch (v) {
        case ProtocolVariant::cpt_scan:
        case ProtocolVariant::odmr_scan:
        case ProtocolVariant::mollow: return Unit::angular;
        case ProtocolVariant::optical_rabi: return Unit::angle;
        default: return Unit::time;
    }
}

// ------------------------------------------------------------------ schema

using Getter = std::function<Value(const RunConfig&)>;
using Setter = std::function<void(RunConfig&, const Value&)>;
using Check = std::function<std::string(const Value&)>;

struct KeySpec {
    std::string section;
    std::string key;
    Kind kind;
    Unit unit;
    Getter get;
    Setter set;
    Check check;
    const char* pretty = nullptr;  ///< preferred spelling of the default
};

double num(const Value& v) { return std::get<double>(v); }

Check positive(const char* unit_text) {
    return [unit_text](const Value& v) -> std::string {
        if (num(v) > 0) return {};
        return std::string("must be > 0 ") + unit_text;
    };
}
Check non_negative(const char* unit_text) {
    return [unit_text](const Value& v) -> std::string {
        if (num(v) >= 0) return {};
        return std::string("must be >= 0 ") + unit_text;
    };
}
Check any() {
    return [](const Value&) { return std::string(); };
}
Check unit_interval() {
    return [](const Value& v) -> std::string {
        if (num(v) > 0 && num(v) <= 1) return {};
        return "must lie in (0, 1]";
    };
}

#define QU(sec, k, unit, field_expr, chk, pretty_text)                                               \
    KeySpec {                                                                                        \
        sec, k, Kind::quantity, unit, [](const RunConfig& c) -> Value { return c.field_expr.value(); }, \
            [](RunConfig& c, const Value& v) { c.field_expr = decltype(c.field_expr)(num(v)); }, chk,   \
            pretty_text                                                                              \
    }

#define QTY(sec, k, unit, field_expr, chk, pretty_text)                                              \
    KeySpec {                                                                                        \
        sec, k, Kind::quantity, unit, [](const RunConfig& c) -> Value { return c.field_expr; },       \
            [](RunConfig& c, const Value& v) { c.field_expr = num(v); }, chk, pretty_text           \
    }

std::vector<KeySpec> build_schema() {
    std::vector<KeySpec> s;
    s.push_back({"run", "command", Kind::word, Unit::none,
                 [](const RunConfig& c) -> Value { return std::string(to_string(c.command)); },
                 [](RunConfig&, const Value&) {}, any()});
    s.push_back({"output", "format", Kind::word, Unit::none,
                 [](const RunConfig& c) -> Value { return std::string(to_string(c.format)); },
                 [](RunConfig& c, const Value& v) {
                     c.format = std::get<std::string>(v) == "json" ? OutputFormat::json : OutputFormat::csv;
                 },
                 [](const Value& v) -> std::string {
                     const auto& w = std::get<std::string>(v);
                     return w == "csv" || w == "json" ? "" : "must be csv or json";
                 }});
    s.push_back({"output", "dir", Kind::word, Unit::none,
                 [](const RunConfig& c) -> Value { return c.output_dir; },
                 [](RunConfig& c, const Value& v) { c.output_dir = std::get<std::string>(v); }, any()});

    s.push_back(QTY("params", "lambda_g", Unit::angular, params.lambda_g, positive("Hz"), "48 GHz"));
    s.push_back(QTY("params", "lambda_e", Unit::angular, params.lambda_e, positive("Hz"), "259 GHz"));
    s.push_back(QTY("params", "strain_g_alpha", Unit::angular, params.strain_g.alpha, any(), "0 GHz"));
    s.push_back(QTY("params", "strain_g_beta", Unit::angular, params.strain_g.beta, any(), "0 GHz"));
    s.push_back(QTY("params", "strain_e_alpha", Unit::angular, params.strain_e.alpha, any(), "0 GHz"));
    s.push_back(QTY("params", "strain_e_beta", Unit::angular, params.strain_e.beta, any(), "0 GHz"));
    s.push_back(QTY("params", "g_spin", Unit::none, params.g_spin, any(), "2"));
    s.push_back(QTY("params", "f_orbital", Unit::none, params.f_orbital, any(), "0.1"));
    s.push_back(QTY("params", "hyperfine_apar", Unit::hertz, params.hyperfine_apar, any(), "70 MHz"));
    s.push_back(QTY("params", "nu0", Unit::hertz, params.nu0, positive("Hz"), "406.819 THz"));
    s.push_back({"params", "tau_rad", Kind::quantity, Unit::time,
                 [](const RunConfig& c) -> Value { return 1.0 / c.params.gamma_rad; },
                 [](RunConfig& c, const Value& v) { c.params.gamma_rad = 1.0 / num(v); }, positive("s"),
                 "1.85 ns"});
    s.push_back(QTY("params", "so_sign_g", Unit::none, params.so_sign_g,
                    [](const Value& v) -> std::string {
                        return std::abs(num(v)) == 1 ? "" : "must be +1 or -1";
                    },
                    "-1"));
    s.push_back(QTY("params", "so_sign_e", Unit::none, params.so_sign_e,
                    [](const Value& v) -> std::string {
                        return std::abs(num(v)) == 1 ? "" : "must be +1 or -1";
                    },
                    "-1"));

    s.push_back({"field", "axis", Kind::list, Unit::none,
                 [](const RunConfig& c) -> Value {
                     return std::vector<double>{c.field_axis(0), c.field_axis(1), c.field_axis(2)};
                 },
                 [](RunConfig& c, const Value& v) {
                     const auto& a = std::get<std::vector<double>>(v);
                     c.field_axis = Vector3(a[0], a[1], a[2]);
                 },
                 [](const Value& v) -> std::string {
                     const auto& a = std::get<std::vector<double>>(v);
                     if (a.size() != 3) return "must have 3 components";
                     if (!(std::hypot(a[0], a[1], a[2]) > 0)) return "must be non-zero";
                     return {};
                 }});
    s.push_back(QTY("field", "magnitude", Unit::tesla, field_magnitude, non_negative("T"), "0 T"));

    s.push_back({"phonon", "mode", Kind::word, Unit::none,
                 [](const RunConfig& c) -> Value { return std::string(to_string(c.phonon.mode)); },
                 [](RunConfig& c, const Value& v) { c.phonon.mode = phonon_mode_from_string(std::get<std::string>(v)); },
                 [](const Value& v) -> std::string {
                     const auto& w = std::get<std::string>(v);
                     return w == "as-written" || w == "detailed-balance" ? "" : "must be as-written or detailed-balance";
                 }});
    s.push_back(QTY("phonon", "chi_rho", Unit::chi, phonon.chi_rho, non_negative("s^2"), nullptr));
    s.push_back(QTY("phonon", "cutoff", Unit::angular, phonon.cutoff, non_negative("Hz"), "0 GHz"));
    s.push_back(QTY("phonon", "calibrate_t1", Unit::time, phonon.calibrate_t1, non_negative("s"), nullptr));
    s.push_back(QTY("phonon", "calibrate_splitting", Unit::angular, phonon.calibrate_splitting, positive("Hz"),
                    "48 GHz"));
    s.push_back(QTY("phonon", "calibrate_temperature", Unit::temperature, phonon.calibrate_temperature,
                    positive("K"), nullptr));

    s.push_back({"spectrum", "nuclear", Kind::boolean, Unit::none,
                 [](const RunConfig& c) -> Value { return c.nuclear; },
                 [](RunConfig& c, const Value& v) { c.nuclear = std::get<bool>(v); }, any()});

    s.push_back(QTY("zeeman", "b_max", Unit::tesla, zeeman_b_max, non_negative("T"), "7 T"));
    s.push_back({"zeeman", "steps", Kind::integer, Unit::none,
                 [](const RunConfig& c) -> Value { return static_cast<long>(c.zeeman_steps); },
                 [](RunConfig& c, const Value& v) { c.zeeman_steps = static_cast<int>(std::get<long>(v)); },
                 [](const Value& v) -> std::string { return std::get<long>(v) >= 2 ? "" : "must be >= 2"; }});

    s.push_back({"rates", "splittings", Kind::list, Unit::angular,
                 [](const RunConfig& c) -> Value { return c.rate_splittings; },
                 [](RunConfig& c, const Value& v) { c.rate_splittings = std::get<std::vector<double>>(v); },
                 [](const Value& v) -> std::string {
                     for (double x : std::get<std::vector<double>>(v))
                         if (!(x > 0)) return "all splittings must be > 0 Hz";
                     return std::get<std::vector<double>>(v).empty() ? "must not be empty" : "";
                 }});
    s.push_back({"rates", "temperatures", Kind::list, Unit::temperature,
                 [](const RunConfig& c) -> Value { return c.rate_temperatures; },
                 [](RunConfig& c, const Value& v) { c.rate_temperatures = std::get<std::vector<double>>(v); },
                 [](const Value& v) -> std::string {
                     for (double x : std::get<std::vector<double>>(v))
                         if (!(x >= 0)) return "all temperatures must be >= 0 K";
                     return std::get<std::vector<double>>(v).empty() ? "must not be empty" : "";
                 }});

    s.push_back({"protocol", "variant", Kind::word, Unit::none,
                 [](const RunConfig& c) -> Value { return std::string(to_string(c.protocol.variant)); },
                 [](RunConfig&, const Value&) {}, any()});
    s.push_back(QTY("protocol", "temperature", Unit::temperature, protocol.temperature, non_negative("K"),
                    nullptr));
    s.push_back({"protocol", "sweep", Kind::list, Unit::sweep,
                 [](const RunConfig& c) -> Value { return c.protocol.sweep; },
                 [](RunConfig& c, const Value& v) { c.protocol.sweep = std::get<std::vector<double>>(v); },
                 [](const Value& v) -> std::string {
                     const auto& a = std::get<std::vector<double>>(v);
                     if (a.empty()) return "must not be empty";
                     for (std::size_t k = 1; k < a.size(); ++k)
                         if (!(a[k] > a[k - 1])) return "must be strictly increasing";
                     return {};
                 }});
    s.push_back(QTY("protocol", "rabi", Unit::angular, protocol.rabi, non_negative("Hz"), nullptr));
    s.push_back(QTY("protocol", "rabi_2", Unit::angular, protocol.rabi_2, non_negative("Hz"), nullptr));
    s.push_back(QTY("protocol", "detuning", Unit::angular, protocol.detuning, any(), nullptr));
    s.push_back(QTY("protocol", "pulse_duration", Unit::time, protocol.pulse_duration, non_negative("s"), nullptr));
    s.push_back(QTY("protocol", "readout_window", Unit::time, protocol.readout_window, positive("s"), "2 ns"));
    s.push_back(QTY("protocol", "pulse_width", Unit::time, protocol.pulse_width, positive("s"), "12 ps"));
    s.push_back(QTY("protocol", "spin_dephasing", Unit::angular, protocol.spin_dephasing, non_negative("Hz"),
                    nullptr));
    s.push_back(QTY("protocol", "laser_linewidth", Unit::angular, protocol.laser_linewidth, non_negative("Hz"),
                    nullptr));
    s.push_back(QTY("protocol", "excited_t2_lower", Unit::time, protocol.excited_t2_lower, positive("s"),
                    "1044 ps"));
    s.push_back(QTY("protocol", "excited_t2_upper", Unit::time, protocol.excited_t2_upper, positive("s"),
                    "398 ps"));
    s.push_back({"protocol", "transition", Kind::word, Unit::none,
                 [](const RunConfig& c) -> Value { return c.protocol.transition; },
                 [](RunConfig& c, const Value& v) { c.protocol.transition = std::get<std::string>(v); },
                 [](const Value& v) -> std::string {
                     const auto& w = std::get<std::string>(v);
                     return w == "A" || w == "B" || w == "C" || w == "D" ? "" : "must be one of A, B, C, D";
                 }});
    s.push_back({"protocol", "pump_line", Kind::word, Unit::none,
                 [](const RunConfig& c) -> Value { return c.protocol.pump_line; },
                 [](RunConfig& c, const Value& v) { c.protocol.pump_line = std::get<std::string>(v); }, any()});
    s.push_back({"protocol", "read_line", Kind::word, Unit::none,
                 [](const RunConfig& c) -> Value { return c.protocol.read_line; },
                 [](RunConfig& c, const Value& v) { c.protocol.read_line = std::get<std::string>(v); }, any()});
    s.push_back({"protocol", "hyperfine", Kind::boolean, Unit::none,
                 [](const RunConfig& c) -> Value { return c.protocol.hyperfine; },
                 [](RunConfig& c, const Value& v) { c.protocol.hyperfine = std::get<bool>(v); }, any()});
    s.push_back(QTY("protocol", "sim_time", Unit::time, protocol.sim_time, positive("s"), "20 ns"));
    s.push_back(QTY("protocol", "time_step", Unit::time, protocol.time_step, positive("s"), "10 ps"));
    s.push_back(QTY("protocol", "tol", Unit::none, protocol.tol,
                    [](const Value& v) -> std::string {
                        return num(v) > 0 && num(v) < 1e-3 ? "" : "must lie in (0, 1e-3)";
                    },
                    "1e-09"));
    s.push_back(QTY("protocol", "tune_cpt_fwhm", Unit::hertz, cpt_target_fwhm, non_negative("Hz"), "0 MHz"));

    s.push_back(QU("photophysics", "p_pi", Unit::power, photophysics.p_pi, positive("W"), "817 nW"));
    s.push_back(QTY("photophysics", "transmission", Unit::none, photophysics.focus.t_transmission,
                    unit_interval(), "0.68"));
    s.push_back(QTY("photophysics", "field_ratio", Unit::none, photophysics.focus.s_field_ratio,
                    unit_interval(), "0.57"));
    s.push_back(QTY("photophysics", "refractive_index", Unit::none, photophysics.focus.n_index, positive(""),
                    "2.4"));
    s.push_back(QU("photophysics", "d_focus", Unit::length, photophysics.focus.d_focus, positive("m"),
                   "862 nm"));
    s.push_back(QU("photophysics", "w_pulse", Unit::time, photophysics.train.w_pulse, positive("s"), "12 ps"));
    s.push_back(QU("photophysics", "rep_period", Unit::time, photophysics.train.rep_period, positive("s"),
                   nullptr));
    s.push_back(QU("photophysics", "tau_fl", Unit::time, photophysics.tau_fl, positive("s"), "1.85 ns"));
    s.push_back(QU("photophysics", "nu", Unit::hertz, photophysics.nu, positive("Hz"), "406.819 THz"));
    return s;
}

#undef QTY
#undef QU


const std::vector<KeySpec>& schema() {
    static const std::vector<KeySpec> s = build_schema();
    return s;
}

const std::vector<std::string>& section_order() {
    static const std::vector<std::string> order = {"run",   "output", "params",   "field",   "phonon",
                                                   "spectrum", "zeeman", "rates", "protocol", "photophysics"};
    return order;
}

bool section_relevant(const std::string& section, Command c) {
    if (section == "run" || section == "output" || section == "params" || section == "field") return true;
    switch (c) {
        case Command::spectrum: return section == "spectrum";
        case Command::zeeman_map: return section == "zeeman";
        case Command::rates: return section == "phonon" || section == "rates";
        case Command::protocol: return section == "phonon" || section == "protocol";
        case Command::photophysics: return section == "photophysics";
    }
    return false;
}

Command command_from_string(const std::string& s) {
    if (s == "spectrum") return Command::spectrum;
    if (s == "zeeman-map") return Command::zeeman_map;
    if (s == "rates") return Command::rates;
    if (s == "protocol") return Command::protocol;
    if (s == "photophysics") return Command::photophysics;
    throw InvalidParameter("must be one of spectrum, zeeman-map, rates, protocol, photophysics");
}

// ------------------------------------------------------------------ lexing

struct RawEntry {
    std::string section;
    std::string key;
    std::string text;
    int line = 0;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Removes a trailing comment, respecting double quotes.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
    });
}

bool parse_double(const std::string& text, double& out) {
    std::string t = text;
    if (!t.empty() && t[0] == '+') t.erase(0, 1);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

struct Parsed {
    Value value;
    std::string canonical;
};

std::string location(const RawEntry& e) {
    return e.section + "." + e.key + " (line " + std::to_string(e.line) + ")";
}

UnitFactor unit_factor(Unit u, const std::string& unit, std::string& error) {
    const auto& table = unit_table(u);
    if (u == Unit::none) {
        if (!unit.empty()) error = "takes no unit (got '" + unit + "')";
        return {"", 1.0};
    }
    if (unit.empty()) {
        error = std::string("missing unit; expected ") + unit_kind_name(u);
        return {"", 1.0};
    }
    for (const auto& f : table)
        if (unit == f.name) return f;
    std::string names;
    for (const auto& f : table) names += (names.empty() ? "" : ", ") + std::string(f.name);
    error = "unit '" + unit + "' is not " + unit_kind_name(u) + " (expected one of " + names + ")";
    return {"", 1.0};
}

// `number` has already been validated by parse_double.
double to_si(const std::string& number, const UnitFactor& f) {
    double x = 0.0;
    if (f.exp10 == 0) {
        parse_double(number, x);
        return x * f.base;
    }
    const auto e = number.find_first_of("eE");
    long exponent = f.exp10;
    if (e != std::string::npos) exponent += std::stol(number.substr(e + 1));
    parse_double(number.substr(0, e) + "e" + std::to_string(exponent), x);
    return x * f.base;
}

std::string quote_if_needed(const std::string& w) {
    const bool plain = !w.empty() && std::all_of(w.begin(), w.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || std::string("_-./+").find(ch) != std::string::npos;
    });
    return plain ? w : "\"" + w + "\"";
}

std::string join_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + format_number(v[k]);
    return out + "]";
}

Parsed parse_value(const KeySpec& spec, Unit unit, const std::string& text, std::string& error) {
    Parsed p;
    switch (spec.kind) {
        case Kind::boolean:
            if (text == "true" || text == "false") {
                p.value = text == "true";
                p.canonical = text;
            } else {
                error = "expected true or false (got '" + text + "')";
            }
            return p;
        case Kind::integer: {
            long n = 0;
            const auto res = std::from_chars(text.data(), text.data() + text.size(), n);
            if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
                error = "expected an integer (got '" + text + "')";
                return p;
            }
            p.value = n;
            p.canonical = std::to_string(n);
            return p;
        }
        case Kind::word: {
            std::string w = text;
            if (w.size() >= 2 && w.front() == '"' && w.back() == '"') w = w.substr(1, w.size() - 2);
            if (w.empty()) {
                error = "expected a value";
                return p;
            }
            p.value = w;
            p.canonical = quote_if_needed(w);
            return p;
        }
        case Kind::quantity: {
            const auto sp = text.find_first_of(" \t");
            const std::string number = sp == std::string::npos ? text : text.substr(0, sp);
            const std::string u = sp == std::string::npos ? "" : trim(text.substr(sp));
            double x = 0.0;
            if (!parse_double(number, x)) {
                error = "expected a number (got '" + number + "')";
                return p;
            }
            const UnitFactor f = unit_factor(unit, u, error);
            if (!error.empty()) return p;
            p.value = to_si(number, f);
            p.canonical = format_number(x) + (u.empty() ? "" : " " + u);
            return p;
        }
        case Kind::list: {
            if (text.empty() || text.front() != '[') {
                error = "expected a list '[a, b, ...]'";
                return p;
            }
            const auto close = text.find(']');
            if (close == std::string::npos) {
                error = "unterminated list";
                return p;
            }
            const std::string body = text.substr(1, close - 1);
            const std::string u = trim(text.substr(close + 1));
            std::vector<double> xs;
            std::vector<std::string> texts;
            std::stringstream ss(body);
            std::string item;
            while (std::getline(ss, item, ',')) {
                double x = 0.0;
                if (!parse_double(trim(item), x)) {
                    error = "expected a number in list (got '" + trim(item) + "')";
                    return p;
                }
                xs.push_back(x);
                texts.push_back(trim(item));
            }
            const UnitFactor f = unit_factor(unit, u, error);
            if (!error.empty()) return p;
            p.canonical = join_list(xs) + (u.empty() ? "" : " " + u);
            for (std::size_t k = 0; k < xs.size(); ++k) xs[k] = to_si(texts[k], f);
            p.value = xs;
            return p;
        }
    }
    return p;
}

std::string default_text(const KeySpec& spec, Unit unit, const RunConfig& base) {
    const Value v = spec.get(base);
    if (spec.pretty != nullptr) {
        std::string err;
        const Parsed p = parse_value(spec, unit, spec.pretty, err);
        if (err.empty()) {
            // Compare through the setter: derived keys such as tau_rad store a different quantity.
            RunConfig probe = base;
            spec.set(probe, p.value);
            if (spec.get(probe) == v) return p.canonical;
        }
    }
    const std::string u = canonical_unit(unit);
    const std::string suffix = u.empty() ? "" : " " + u;
    if (std::holds_alternative<double>(v)) return format_number(std::get<double>(v)) + suffix;
    if (std::holds_alternative<std::vector<double>>(v)) return join_list(std::get<std::vector<double>>(v)) + suffix;
    if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "true" : "false";
    if (std::holds_alternative<long>(v)) return std::to_string(std::get<long>(v));
    return quote_if_needed(std::get<std::string>(v));
}

RunConfig defaults_for(Command command, ProtocolVariant variant) {
    RunConfig c;
    c.command = command;
    if (command == Command::rates) {
        c.phonon.calibrate_t1 = 39e-9;
        c.phonon.calibrate_temperature = 5.0;
        c.rate_splittings = {angular(48e9), angular(470e9)};
        c.rate_temperatures = {2.0, 4.0, 5.0, 10.0};
    }
    if (command == Command::protocol) {
        c.protocol = default_protocol_config(variant);
        c.params = c.protocol.params;
        const double b = c.protocol.field.magnitude();
        if (b > 0) c.field_axis = c.protocol.field.b / b;
        c.field_magnitude = b;
        switch (variant) {
            case ProtocolVariant::optical_pumping_t1:
            case ProtocolVariant::spin_t1:
                c.phonon.calibrate_t1 = 39e-9;
                c.phonon.calibrate_temperature = 5.0;
                break;
            case ProtocolVariant::mw_rabi:
            case ProtocolVariant::mw_ramsey:
                c.phonon.calibrate_t1 = 66.5e-9;
                c.phonon.calibrate_temperature = 2.0;
                break;
            default: break;
        }
    }
    return c;
}

std::vector<RawEntry> lex(const std::string& text, std::vector<std::string>& errors) {
    std::vector<RawEntry> out;
    std::string section = "run";
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const std::string t = trim(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[' && t.find('=') == std::string::npos) {
            if (t.back() != ']') {
                errors.push_back("line " + std::to_string(n) + ": malformed section header '" + t + "'");
                continue;
            }
            section = trim(t.substr(1, t.size() - 2));
            if (std::find(section_order().begin(), section_order().end(), section) == section_order().end())
                errors.push_back("line " + std::to_string(n) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(n) + ": expected 'key = value' in [" + section + "]");
            continue;
        }
        RawEntry e{section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)), n};
        if (!valid_name(e.key)) {
            errors.push_back("line " + std::to_string(n) + ": invalid key name '" + e.key + "' in [" + section + "]");
            continue;
        }
        if (!seen.insert(section + "." + e.key).second) {
            errors.push_back(location(e) + ": duplicate key");
            continue;
        }
        out.push_back(e);
    }
    return out;
}

const KeySpec* find_spec(const std::string& section, const std::string& key) {
    for (const auto& s : schema())
        if (s.section == section && s.key == key) return &s;
    return nullptr;
}

}  // namespace

const char* to_string(Command c) {
    switch (c) {
        case Command::spectrum: return "spectrum";
        case Command::zeeman_map: return "zeeman-map";
        case Command::rates: return "rates";
        case Command::protocol: return "protocol";
        case Command::photophysics: return "photophysics";
    }
    return "?";
}

const char* to_string(OutputFormat f) { return f == OutputFormat::json ? "json" : "csv"; }

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

PhononModel PhononSettings::model() const {
    PhononModel m{chi_rho, mode, cutoff};
    if (calibrate_t1 > 0) {
        m = calibrate(calibrate_splitting, calibrate_temperature, calibrate_t1, mode);
        m.cutoff = cutoff;
    }
    return m;
}

ProtocolConfig RunConfig::protocol_config() const {
    ProtocolConfig p = protocol;
    p.params = params;
    p.field = field();
    p.phonon = phonon.model();
    return p;
}

RunConfig parse_config(const std::string& text) {
    std::vector<std::string> errors;
    const std::vector<RawEntry> raw = lex(text, errors);

    auto find_raw = [&](const std::string& section, const std::string& key) -> const RawEntry* {
        for (const auto& e : raw)
            if (e.section == section && e.key == key) return &e;
        return nullptr;
    };

    Command command = Command::spectrum;
    if (const RawEntry* e = find_raw("run", "command")) {
        try {
            command = command_from_string(e->text);
        } catch (const InvalidParameter& ex) {
            errors.push_back(location(*e) + ": " + ex.what() + " (got '" + e->text + "')");
        }
    } else {
        errors.push_back("run.command: missing required field");
    }
    ProtocolVariant variant = ProtocolVariant::optical_pumping_t1;
    if (const RawEntry* e = find_raw("protocol", "variant")) {
        try {
            variant = protocol_variant_from_string(e->text);
        } catch (const InvalidParameter& ex) {
            errors.push_back(location(*e) + ": " + ex.what());
        }
    } else if (command == Command::protocol) {
        errors.push_back("protocol.variant: missing required field");
    }

    const RunConfig base = defaults_for(command, variant);
    RunConfig cfg = base;

    for (const auto& e : raw) {
        if (std::find(section_order().begin(), section_order().end(), e.section) == section_order().end())
            continue;  // already reported
        if (find_spec(e.section, e.key) == nullptr)
            errors.push_back(location(e) + ": unknown key '" + e.key + "' in [" + e.section + "]");
    }

    for (const auto& spec : schema()) {
        const Unit unit = spec.unit == Unit::sweep ? sweep_unit(variant) : spec.unit;
        const RawEntry* e = find_raw(spec.section, spec.key);
        ConfigEntry entry{spec.section, spec.key, {}, e != nullptr};
        if (e != nullptr) {
            std::string err;
            const Parsed p = parse_value(spec, unit, e->text, err);
            if (err.empty()) err = spec.check(p.value);
            if (!err.empty()) {
                errors.push_back(location(*e) + ": " + err + " (got '" + e->text + "')");
                continue;
            }
            try {
                spec.set(cfg, p.value);
            } catch (const Error& ex) {
                errors.push_back(location(*e) + ": " + ex.what());
                continue;
            }
            entry.value = p.canonical;
        } else {
            entry.value = default_text(spec, unit, base);
        }
        if (e != nullptr || section_relevant(spec.section, command)) cfg.entries.push_back(entry);
    }

    // Whole-object constraints, reported under their section.
    auto guard = [&](const char* section, const auto& fn) {
        try {
            fn();
        } catch (const Error& ex) {
            errors.push_back(std::string(section) + ": " + ex.what());
        }
    };
    if (errors.empty()) {
        guard("params", [&] { cfg.params.validate(); });
        if (section_relevant("phonon", command)) guard("phonon", [&] { cfg.phonon.model().validate(); });
        if (command == Command::protocol) guard("protocol", [&] { cfg.protocol_config().validate(); });
        if (command == Command::photophysics)
            guard("photophysics", [&] {
                cfg.photophysics.focus.validate();
                PulseTrain t = cfg.photophysics.train;
                t.p_avg = cfg.photophysics.p_pi;
                t.validate();
            });
    }
    if (!errors.empty()) throw ConfigError(errors);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& section : section_order()) {
        bool header = false;
        for (const auto& e : cfg.entries) {
            if (e.section != section) continue;
            if (!header) {
                if (!out.empty()) out += "\n";
                out += "[" + section + "]\n";
                header = true;
            }
            out += e.key + " = " + e.value + "\n";
        }
    }
    return out;
}

RunConfig with_override(const RunConfig& cfg, const std::string& key_path, const std::string& value) {
    const auto dot = key_path.find('.');
    if (dot == std::string::npos) throw ConfigError({key_path + ": override key must be 'section.key'"});
    const std::string section = key_path.substr(0, dot), key = key_path.substr(dot + 1);
    if (find_spec(section, key) == nullptr) throw ConfigError({key_path + ": unknown key"});

    std::string text;
    bool replaced = false;
    for (const auto& s : section_order()) {
        text += "[" + s + "]\n";
        for (const auto& e : cfg.entries) {
            if (e.section != s) continue;
            if (e.key == key && e.section == section) {
                text += e.key + " = " + value + "\n";
                replaced = true;
            } else if (e.user_set) {
                text += e.key + " = " + e.value + "\n";
            }
        }
        if (s == section && !replaced) {
            text += key + " = " + value + "\n";
            replaced = true;
        }
    }
    return parse_config(text);
}

std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : serialize_config(cfg)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace siv
