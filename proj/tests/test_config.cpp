#include "test_util.hpp"

#include <cmath>
#include <string>

#include "siv/config.hpp"
#include "siv/constants.hpp"
#include "siv/errors.hpp"

using namespace siv;

namespace {

std::vector<std::string> violations(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.violations;
    }
    return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& a, const std::string& b = "") {
    for (const auto& s : v)
        if (s.find(a) != std::string::npos && s.find(b) != std::string::npos) return true;
    return false;
}

const char* kMinimal = "[run]\ncommand = spectrum\n";

}  // namespace

TEST_CASE("minimal spectrum config fills defaults and round-trips byte for byte") {
    const RunConfig c = parse_config(kMinimal);
    CHECK(c.command == Command::spectrum);
    CHECK(c.params.lambda_g == approx(two_pi * 48e9).epsilon(1e-15));
    CHECK(c.params.lambda_e == approx(two_pi * 259e9).epsilon(1e-15));
    const std::string text = serialize_config(c);
    CHECK(text.find("lambda_g = 48 GHz") != std::string::npos);
    CHECK(text.find("tau_rad = 1.85 ns") != std::string::npos);
    const RunConfig again = parse_config(text);
    CHECK(serialize_config(again) == text);
    CHECK(config_hash(again) == config_hash(c));
}

TEST_CASE("every command and protocol variant round-trips") {
    for (const char* cmd : {"spectrum", "zeeman-map", "rates", "photophysics"}) {
        const std::string text = serialize_config(parse_config(std::string("[run]\ncommand = ") + cmd + "\n"));
        CHECK(serialize_config(parse_config(text)) == text);
    }
    for (auto v : all_protocol_variants()) {
        const RunConfig c = parse_config(std::string("[run]\ncommand = protocol\n[protocol]\nvariant = ") +
                                         to_string(v) + "\n");
        const std::string text = serialize_config(c);
        const RunConfig again = parse_config(text);
        CHECK(serialize_config(again) == text);
        CHECK(again.protocol.sweep == c.protocol.sweep);
        CHECK(again.protocol.rabi == c.protocol.rabi);
        CHECK(again.protocol_config().phonon.chi_rho == c.protocol_config().phonon.chi_rho);
    }
}

TEST_CASE("unit suffixes convert to SI and angular frequency") {
    const RunConfig c = parse_config(
        "[run]\ncommand = spectrum\n[params]\nlambda_g = 48 GHz\nlambda_e = 259000 MHz\ntau_rad = 1850 ps\n"
        "[field]\naxis = [1, 1, 1]\nmagnitude = 250 mT\n");
    CHECK(c.params.lambda_g == 2 * 3.141592653589793 * 4.8e10);
    CHECK(c.params.lambda_e == approx(two_pi * 259e9).epsilon(1e-15));
    CHECK(1 / c.params.gamma_rad == approx(1.85e-9).epsilon(1e-15));
    CHECK(c.field_magnitude == 0.25);
    CHECK(parse_config("[run]\ncommand = spectrum\n[params]\nlambda_g = 301592894745.9 rad/s\n").params.lambda_g ==
          301592894745.9);
    // Decimal prefixes are exact: the same digits give the same double.
    CHECK(parse_config("[run]\ncommand = spectrum\n[params]\ntau_rad = 1.85 ns\n").params.gamma_rad ==
          1 / 1.85e-9);
    CHECK(parse_config("[run]\ncommand = spectrum\n[params]\ntau_rad = 0.00185e-6 s\n").params.gamma_rad ==
          1 / 1.85e-9);
}

TEST_CASE("a negative temperature names the key and the constraint") {
    const auto v = violations("[run]\ncommand = protocol\n[protocol]\nvariant = cpt_scan\ntemperature = -1 K\n");
    REQUIRE(v.size() == 1);
    CHECK(mentions(v, "protocol.temperature", ">= 0 K"));
    CHECK(mentions(v, "line 5"));
}

TEST_CASE("all violations are reported, each with its key path") {
    const auto v = violations(
        "[run]\ncommand = protocol\n[protocol]\nvariant = cpt_scan\ntemperature = -1 K\nbogus = 3\n"
        "rabi = 3 kg\n[params]\nlambda_g = 48\n[nowhere]\n");
    CHECK(v.size() == 5);
    CHECK(mentions(v, "protocol.temperature"));
    CHECK(mentions(v, "protocol.bogus", "unknown key"));
    CHECK(mentions(v, "protocol.rabi", "kg"));
    CHECK(mentions(v, "params.lambda_g", "missing unit"));
    CHECK(mentions(v, "unknown section [nowhere]"));
}

TEST_CASE("missing required fields and malformed lines") {
    CHECK(mentions(violations("[params]\nlambda_g = 48 GHz\n"), "run.command", "missing"));
    CHECK(mentions(violations("[run]\ncommand = protocol\n"), "protocol.variant", "missing"));
    CHECK(mentions(violations("[run]\ncommand = dance\n"), "run.command"));
    CHECK(mentions(violations("[run]\ncommand = spectrum\n[params]\nlambda_g 48 GHz\n"), "line 4"));
    CHECK(mentions(violations("[run]\ncommand = spectrum\ncommand = rates\n"), "duplicate"));
    CHECK(mentions(violations("[run]\ncommand = spectrum\n[field]\naxis = [0, 0, 0]\n"), "field.axis", "non-zero"));
    CHECK(mentions(violations("[run]\ncommand = spectrum\n[params]\nlambda_g = -48 GHz\n"), "params.lambda_g"));
    CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), ConfigError);
}

TEST_CASE("comments and whitespace do not change the configuration") {
    const RunConfig a = parse_config(kMinimal);
    const RunConfig b = parse_config("# header\n\n[run]   \n  command   =   spectrum   # trailing\n");
    CHECK(serialize_config(a) == serialize_config(b));
}

TEST_CASE("with_override replaces one key and keeps the rest") {
    const RunConfig c = parse_config("[run]\ncommand = spectrum\n[field]\nmagnitude = 1 T\n");
    const RunConfig o = with_override(c, "params.lambda_g", "50 GHz");
    CHECK(o.params.lambda_g == approx(two_pi * 50e9).epsilon(1e-15));
    CHECK(o.field_magnitude == 1.0);
    CHECK(config_hash(o) != config_hash(c));
    CHECK(config_hash(with_override(c, "field.magnitude", "1 T")) == config_hash(c));
    CHECK_THROWS_AS(with_override(c, "params.nothing", "1"), ConfigError);
    CHECK_THROWS_AS(with_override(c, "lambda_g", "1 GHz"), ConfigError);
    CHECK_THROWS_AS(with_override(c, "params.lambda_g", "1 T"), ConfigError);
}

TEST_CASE("config hash is a stable 16-digit hex string") {
    const std::string h = config_hash(parse_config(kMinimal));
    CHECK(h.size() == 16);
    CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(h == config_hash(parse_config(kMinimal)));
}

TEST_CASE("phonon settings: calibration or explicit chi_rho") {
    const RunConfig r = parse_config("[run]\ncommand = rates\n");
    const PhononModel m = r.phonon.model();
    CHECK(orbital_t1(m, angular(48e9), 5.0) == approx(39e-9).epsilon(1e-9));
    const RunConfig e = parse_config("[run]\ncommand = rates\n[phonon]\ncalibrate_t1 = 0 s\nchi_rho = 1e-30 s^2\n");
    CHECK(e.phonon.model().chi_rho == 1e-30);
    const RunConfig db = with_override(r, "phonon.mode", "detailed-balance");
    CHECK(db.phonon.model().mode == PhononMode::detailed_balance);
    CHECK(mentions(violations("[run]\ncommand = rates\n[phonon]\nmode = bose\n"), "phonon.mode"));
}

TEST_CASE("format_number is the shortest exact spelling") {
    for (double v : {0.1, 1.0 / 3.0, 48e9, 1.85e-9, -2.5, 6.02214076e23}) {
        const std::string s = format_number(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(48e9) == "4.8e+10");
}
