#include "siv/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "CLI11.hpp"

#include "siv/errors.hpp"
#include "siv/io.hpp"

namespace siv {

namespace {

std::string stem(const RunConfig& cfg) {
    if (cfg.command == Command::protocol) return to_string(cfg.protocol.variant);
    std::string s = to_string(cfg.command);
    for (char& c : s)
        if (c == '-') c = '_';
    return s;
}

std::vector<std::string> basis_labels(const RunConfig& cfg) {
    return build_ground_hamiltonian(cfg.params, cfg.field(), cfg.nuclear).basis_labels();
}

RunOutput execute_spectrum(const RunConfig& cfg) {
    const auto field = cfg.field();
    const auto gs = eigensystem(build_ground_hamiltonian(cfg.params, field, cfg.nuclear));
    const auto es = eigensystem(build_excited_hamiltonian(cfg.params, field, cfg.nuclear));
    const auto table = transition_table(gs, es, cfg.params);
    RunOutput out;
    const auto basis = basis_labels(cfg);
    if (cfg.format == OutputFormat::csv)
        out.artifacts.push_back({"csv", transition_table_csv(table, cfg.params.nu0, basis)});
    else
        out.artifacts.push_back({"json", transition_table_json(table, cfg.params.nu0, basis)});
    for (const auto& t : table.entries) {
        out.summary.emplace_back(t.label + "_offset_hz", t.frequency - cfg.params.nu0);
        out.summary.emplace_back(t.label + "_rel_intensity", t.rel_intensity);
    }
    return out;
}

RunOutput execute_zeeman(const RunConfig& cfg) {
    const auto map = zeeman_map(cfg.params, cfg.field_axis, cfg.zeeman_b_max, cfg.zeeman_steps);
    RunOutput out;
    if (cfg.format == OutputFormat::csv)
        out.artifacts.push_back({"csv", zeeman_map_csv(map, cfg.params.nu0)});
    else
        out.artifacts.push_back({"json", zeeman_map_json(map, cfg.params.nu0)});
    for (const auto& t : map.back().table.entries)
        out.summary.emplace_back(t.label + "_offset_hz_at_b_max", t.frequency - cfg.params.nu0);
    return out;
}

RunOutput execute_rates(const RunConfig& cfg) {
    const PhononModel model = cfg.phonon.model();
    std::vector<RateRow> rows;
    for (double d : cfg.rate_splittings)
        for (double t : cfg.rate_temperatures) rows.push_back({d, t, rates(model, d, t), orbital_t1(model, d, t)});
    RunOutput out;
    if (cfg.format == OutputFormat::csv)
        out.artifacts.push_back({"csv", rates_csv(rows, model)});
    else
        out.artifacts.push_back({"json", rates_json(rows, model)});
    out.summary.emplace_back("chi_rho", model.chi_rho);
    for (const auto& r : rows) {
        const std::string tag = csv_number(hertz(r.splitting)) + "hz_" + csv_number(r.temperature) + "k";
        out.summary.emplace_back("t1_" + tag, r.t1);
    }
    return out;
}

RunOutput execute_protocol(const RunConfig& cfg) {
    ProtocolConfig pc = cfg.protocol_config();
    RunOutput out;
    if (pc.variant == ProtocolVariant::cpt_scan && cfg.cpt_target_fwhm > 0) {
        pc.rabi = tune_cpt_rabi(pc, cfg.cpt_target_fwhm);
        pc.rabi_2 = 0.0;
        out.summary.emplace_back("tuned_rabi", pc.rabi);
    }
    ProtocolResult r = run_protocol(pc);
    if (cfg.format == OutputFormat::csv) {
        out.artifacts.push_back({"csv", protocol_csv(r)});
        out.artifacts.push_back({"json", protocol_json(r, false)});
    } else {
        out.artifacts.push_back({"json", protocol_json(r, true)});
    }
    for (const auto& d : r.derived) out.summary.push_back(d);
    out.warnings = r.warnings;
    return out;
}

RunOutput execute_photophysics(const RunConfig& cfg) {
    const DipoleResult d = photophysics_chain(cfg.photophysics);
    RunOutput out;
    if (cfg.format == OutputFormat::csv)
        out.artifacts.push_back({"csv", photophysics_csv(d)});
    else
        out.artifacts.push_back({"json", photophysics_json(d)});
    out.summary = {{"mu_debye", d.mu_debye}, {"tau0_s", d.tau0.value()}, {"phi", d.phi}};
    if (!d.warning.empty()) out.warnings.push_back(d.warning);
    return out;
}

int classify(const std::exception_ptr& ep, std::string& message) {
    try {
        std::rethrow_exception(ep);
    } catch (const ConfigError& e) {
        message = std::string("configuration error:\n") + e.what();
        return exit_config;
    } catch (const NumericalError& e) {
        message = std::string("numerical failure: ") + e.what();
        return exit_numerical;
    } catch (const InvalidParameter& e) {
        message = std::string("invalid parameter: ") + e.what();
        return exit_config;
    } catch (const DimensionMismatch& e) {
        message = std::string("invalid parameter: ") + e.what();
        return exit_config;
    } catch (const std::exception& e) {
        message = std::string("error: ") + e.what();
        return exit_failure;
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

RunOutput execute(const RunConfig& cfg) {
    RunOutput out;
    switch (cfg.command) {
        case Command::spectrum: out = execute_spectrum(cfg); break;
        case Command::zeeman_map: out = execute_zeeman(cfg); break;
        case Command::rates: out = execute_rates(cfg); break;
        case Command::protocol: out = execute_protocol(cfg); break;
        case Command::photophysics: out = execute_photophysics(cfg); break;
    }
    const std::string base = stem(cfg) + "_" + config_hash(cfg);
    for (auto& a : out.artifacts) a.name = base + "." + a.name;
    return out;
}

std::string resolve_output_dir(const RunConfig& cfg, const std::string& explicit_dir) {
    if (!explicit_dir.empty()) return explicit_dir;
    if (const char* env = std::getenv("SIVSIM_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
    return cfg.output_dir;
}

int run(const RunConfig& cfg, const std::string& out_dir, std::string* log) {
    std::string message;
    try {
        const RunOutput out = execute(cfg);
        const std::string dir = resolve_output_dir(cfg, out_dir);
        std::filesystem::create_directories(dir);
        for (const auto& a : out.artifacts) {
            const std::string path = (std::filesystem::path(dir) / a.name).string();
            write_text_file(path, a.content);
            message += "wrote " + path + "\n";
        }
        for (const auto& w : out.warnings) message += "warning: " + w + "\n";
        if (log) *log += message;
        return exit_ok;
    } catch (...) {
        const int code = classify(std::current_exception(), message);
        if (log) *log += message + "\n";
        return code;
    }
}

std::string SweepTable::to_csv() const {
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (const auto& row : rows)
        for (const auto& [k, v] : row)
            if (seen.insert(k).second) names.push_back(k);
    std::string out = axis;
    for (const auto& n : names) out += "," + n;
    out += "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += "\"" + values[i] + "\"";
        for (const auto& n : names) {
            out += ",";
            for (const auto& [k, v] : rows[i])
                if (k == n) {
                    out += csv_number(v);
                    break;
                }
        }
        out += "\n";
    }
    return out;
}

SweepTable sweep(const RunConfig& cfg, const std::string& axis, const std::vector<std::string>& values, int jobs) {
    if (values.empty()) throw InvalidParameter("sweep needs at least one value");
    // Parse every point up front so configuration errors surface before any work starts.
    std::vector<RunConfig> points;
    for (const auto& v : values) points.push_back(with_override(cfg, axis, v));

    SweepTable table;
    table.axis = axis;
    table.values = values;
    table.rows.resize(values.size());
    std::vector<std::exception_ptr> errors(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                table.rows[i] = execute(points[i]).summary;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(points.size())));
    std::vector<std::thread> threads;
    for (int k = 1; k < n; ++k) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return table;
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"SiV- centre simulator: level structure, phonon rates, protocols, photophysics"};
    std::string config_path, out_dir, format, mode, sweep_spec;
    int jobs = 1;
    app.add_option("--config", config_path, "configuration file")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--jobs", jobs, "parallel sweep workers")->check(CLI::PositiveNumber);
    app.add_option("--mode", mode, "phonon rate mode")->check(CLI::IsMember({"as-written", "detailed-balance"}));
    app.add_option("--sweep", sweep_spec, "section.key=value1;value2;...");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_config;
    }

    std::string message;
    try {
        RunConfig cfg = load_config(config_path);
        if (!format.empty()) cfg = with_override(cfg, "output.format", format);
        if (!mode.empty()) cfg = with_override(cfg, "phonon.mode", mode);
        if (sweep_spec.empty()) {
            std::string log;
            const int code = run(cfg, out_dir, &log);
            (code == exit_ok ? std::cout : std::cerr) << log;
            return code;
        }
        const auto eq = sweep_spec.find('=');
        if (eq == std::string::npos) throw ConfigError({"--sweep: expected section.key=v1;v2;..."});
        const SweepTable table = sweep(cfg, sweep_spec.substr(0, eq), split(sweep_spec.substr(eq + 1), ';'), jobs);
        const std::string dir = resolve_output_dir(cfg, out_dir);
        std::filesystem::create_directories(dir);
        const std::string path = (std::filesystem::path(dir) / ("sweep_" + config_hash(cfg) + ".csv")).string();
        write_text_file(path, table.to_csv());
        std::cout << "wrote " << path << "\n";
        return exit_ok;
    } catch (...) {
        const int code = classify(std::current_exception(), message);
        std::cerr << message << "\n";
        return code;
    }
}

}  // namespace siv
