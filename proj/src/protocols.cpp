#include "siv/protocols.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "siv/constants.hpp"
#include "siv/errors.hpp"

namespace siv {

namespace {

constexpr std::array<const char*, 11> kVariantNames = {
    "optical_pumping_t1", "spin_t1",       "cpt_scan",       "odmr_scan",
    "mw_rabi",            "mw_ramsey",     "optical_rabi",   "optical_ramsey",
    "raman_rabi",         "raman_ramsey",  "mollow"};

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidParameter(what);
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(n);
    for (int k = 0; k < n; ++k) out[k] = n == 1 ? a : a + (b - a) * k / (n - 1);
    return out;
}

std::vector<double> scaled(std::vector<double> v, double k) {
    for (double& x : v) x *= k;
    return v;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t k = 1; k < x.size(); ++k) s += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
    return s;
}

double population(const CMatrix& rho, Eigen::Index i) { return rho(i, i).real(); }

// Levels 0..3 stand for 1..4; each excited level decays evenly into both ground levels.
LevelSystem optical_four_level(const SivParameters& p) {
    LevelSystem sys(CMatrix::Zero(4, 4));
    for (int e : {2, 3})
        for (int g : {0, 1}) sys.channels.push_back({ket_bra(4, g, e), 0.5 * p.gamma_rad, true});
    return sys;
}

std::pair<int, int> line_levels(const std::string& label) {
    if (label == "A") return {0, 3};
    if (label == "B") return {1, 3};
    if (label == "C") return {0, 2};
    if (label == "D") return {1, 2};
    throw InvalidParameter("transition must be one of A, B, C, D (got '" + label + "')");
}

EigenSystem ground_eigensystem(const ProtocolConfig& cfg, bool nuclear = false) {
    return eigensystem(build_ground_hamiltonian(cfg.params, cfg.field, nuclear));
}

// Energy gap between the centres of the two ground orbital branches.
double ground_branch_splitting(const EigenSystem& gs) {
    const auto n = gs.dim();
    const auto half = n / 2;
    return gs.energies.tail(half).mean() - gs.energies.head(half).mean();
}

void add_two_level_phonons(LevelSystem& sys, const PhononModel& model, double delta, double temp) {
    const auto d = sys.dim();
    const RatePair r = rates(model, delta, temp);
    if (r.gamma_plus > 0) sys.channels.push_back({ket_bra(d, 1, 0), r.gamma_plus, false});
    if (r.gamma_minus > 0) sys.channels.push_back({ket_bra(d, 0, 1), r.gamma_minus, false});
}

Drive constant_drive(const CMatrix& coupling, double rabi, double phase = 0.0) {
    Drive d;
    d.coupling = coupling;
    d.rabi = rabi;
    d.phase = phase;
    return d;
}

// Fluorescence emitted during [0, window] starting from rho.
double window_fluorescence(const LevelSystem& sys, const CMatrix& rho, double window, double tol) {
    EvolveOptions opt;
    opt.tol = tol;
    opt.samples = 101;
    const Trajectory tr = evolve(sys, rho, 0.0, window, opt);
    return trapezoid(tr.times, tr.fluorescence);
}

// Thermal starting point of an undriven system; uniform over `levels` when the
// dark dynamics have no unique steady state.
CMatrix dark_start(const LevelSystem& dark, const std::vector<int>& levels) {
    try {
        return steady_state(dark);
    } catch (const DegenerateSteadyState&) {
        CMatrix rho = CMatrix::Zero(dark.dim(), dark.dim());
        for (int i : levels) rho(i, i) = 1.0 / static_cast<double>(levels.size());
        return rho;
    }
}

void add_fit_derived(ProtocolResult& r) {
    if (!r.fit) return;
    r.derived.emplace_back("fit_rms", r.fit->rms);
    r.derived.emplace_back("fit_rel_residual", r.fit->rel_residual);
}

ProtocolResult make_result(const ProtocolConfig& cfg, std::string x_name, std::string y_name) {
    ProtocolResult r;
    r.variant = cfg.variant;
    r.x_name = std::move(x_name);
    r.y_name = std::move(y_name);
    return r;
}

std::optional<FitResult> try_fit_sinusoid(const std::vector<double>& x, const std::vector<double>& y,
                                          ProtocolResult& r) {
    try {
        return fit_damped_sinusoid(x, y);
    } catch (const FitError& e) {
        r.warnings.push_back(std::string("no oscillation fitted: ") + e.what());
        return std::nullopt;
    }
}

double span(const std::vector<double>& y) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    return *hi - *lo;
}

// A recovery smaller than 1e-6 of the unpumped readout sits at the solver
// tolerance; fitting it would only fit integration noise.
void require_recovery(const std::vector<double>& y, double unpumped) {
    if (span(y) > 1e-6 * std::abs(unpumped)) return;
    double m = 0.0;
    for (double v : y) m += v / static_cast<double>(y.size());
    std::vector<double> res;
    for (double v : y) res.push_back(v - m);
    throw FitError("no recovery: readout stays at the pumped level", res);
}

}  // namespace

const char* to_string(ProtocolVariant v) { return kVariantNames.at(static_cast<std::size_t>(v)); }

ProtocolVariant protocol_variant_from_string(const std::string& s) {
    for (std::size_t k = 0; k < kVariantNames.size(); ++k)
        if (s == kVariantNames[k]) return static_cast<ProtocolVariant>(k);
    throw InvalidParameter("unknown protocol variant '" + s + "'");
}

const std::vector<ProtocolVariant>& all_protocol_variants() {
    static const std::vector<ProtocolVariant> all = [] {
        std::vector<ProtocolVariant> v;
        for (std::size_t k = 0; k < kVariantNames.size(); ++k) v.push_back(static_cast<ProtocolVariant>(k));
        return v;
    }();
    return all;
}

void ProtocolConfig::validate() const {
    params.validate();
    phonon.validate();
    require(!sweep.empty(), "sweep axis must not be empty");
    for (std::size_t k = 0; k < sweep.size(); ++k) {
        require(std::isfinite(sweep[k]), "sweep values must be finite");
        if (k > 0) require(sweep[k] > sweep[k - 1], "sweep axis must be strictly increasing");
    }
    require(std::isfinite(temperature) && temperature >= 0, "temperature must be >= 0");
    require(rabi >= 0 && std::isfinite(rabi), "rabi must be >= 0");
    require(rabi_2 >= 0 && std::isfinite(rabi_2), "rabi_2 must be >= 0");
    require(std::isfinite(detuning), "detuning must be finite");
    require(pulse_duration >= 0, "pulse_duration must be >= 0");
    require(readout_window > 0, "readout_window must be > 0");
    require(pulse_width > 0, "pulse_width must be > 0");
    require(spin_dephasing >= 0, "spin_dephasing must be >= 0");
    require(laser_linewidth >= 0, "laser_linewidth must be >= 0");
    require(excited_t2_lower > 0 && excited_t2_upper > 0, "excited coherence times must be > 0");
    require(sim_time > 0 && time_step > 0 && time_step < sim_time, "need 0 < time_step < sim_time");
    require(tol > 0 && tol < 1e-3, "tol must lie in (0, 1e-3)");
}

double ProtocolResult::value(const std::string& name) const {
    for (const auto& [k, v] : derived)
        if (k == name) return v;
    throw InvalidParameter("protocol result has no value '" + name + "'");
}

ProtocolConfig default_protocol_config(ProtocolVariant v) {
    ProtocolConfig c;
    c.variant = v;
    switch (v) {
        case ProtocolVariant::optical_pumping_t1:
            c.phonon = calibrate(angular(48e9), 5.0, 39e-9);
            c.temperature = 5.0;
            c.rabi = angular(100e6);
            c.pulse_duration = 100e-9;
            c.sweep = linspace(20e-9, 300e-9, 29);
            break;
        case ProtocolVariant::spin_t1: {
            c.phonon = calibrate(angular(48e9), 5.0, 39e-9);
            c.temperature = 5.0;
            const Vector3 z = Vector3(1, 1, 1).normalized();
            const Vector3 perp = Vector3(1, 1, -2).normalized();
            const double angle = 70.0 * pi / 180.0;
            c.field = MagneticField::along(std::cos(angle) * z + std::sin(angle) * perp, 0.5);
            c.rabi = angular(50e6);
            c.pulse_duration = 1e-6;
            c.pump_line = "A1";
            c.read_line = "A1";
            c.sweep = linspace(20e-9, 2e-6, 45);
            break;
        }
        case ProtocolVariant::cpt_scan:
            c.rabi = angular(17.0e6);
            c.spin_dephasing = angular(3.5e6);
            c.laser_linewidth = angular(5.0e6);
            c.sweep = scaled(linspace(-40e6, 40e6, 161), two_pi);
            break;
        case ProtocolVariant::odmr_scan:
            c.params.strain_g.alpha = angular(10e9);
            c.field = MagneticField::along(Vector3(1, 1, 1), 0.2);
            c.rabi = angular(5e6);
            c.sweep = scaled(linspace(-150e6, 150e6, 301), two_pi);
            break;
        case ProtocolVariant::mw_rabi:
            c.phonon = calibrate(angular(48e9), 2.0, 66.5e-9);
            c.temperature = 2.0;
            c.field = MagneticField::along(Vector3(1, 1, 1), 0.1);
            c.rabi = angular(15e6);
            c.sweep = linspace(0.0, 300e-9, 301);
            break;
        case ProtocolVariant::mw_ramsey:
            c.phonon = calibrate(angular(48e9), 2.0, 66.5e-9);
            c.temperature = 2.0;
            c.field = MagneticField::along(Vector3(1, 1, 1), 0.1);
            c.rabi = angular(15e6);
            c.detuning = angular(10e6);
            c.sweep = linspace(0.0, 500e-9, 201);
            break;
        case ProtocolVariant::optical_rabi:
            c.transition = "C";
            c.sweep = linspace(0.0, 10.0 * pi, 201);
            break;
        case ProtocolVariant::optical_ramsey:
            c.transition = "C";
            c.detuning = angular(2e9);
            c.sweep = linspace(0.5e-9, 4.0e-9, 176);
            break;
        case ProtocolVariant::raman_rabi:
            c.rabi = angular(10e9);
            c.rabi_2 = angular(10e9);
            c.detuning = angular(500e9);
            c.sweep = linspace(0.0, 30e-9, 301);
            break;
        case ProtocolVariant::raman_ramsey:
            c.rabi = angular(10e9);
            c.rabi_2 = angular(10e9);
            c.detuning = angular(500e9);
            c.sweep = linspace(0.0, 200e-12, 101);
            break;
        case ProtocolVariant::mollow:
            c.rabi = angular(1e9);
            c.sweep = scaled(linspace(0.0, 2e9, 9), two_pi);
            break;
    }
    return c;
}

// ---------------------------------------------------------------- phonons

std::vector<CollapseChannel> phonon_channels(const EigenSystem& ground, const PhononModel& model,
                                             double temp) {
    const auto n = ground.dim();
    if (n % 2 != 0) throw DimensionMismatch("phonon_channels needs an even-dimensional manifold");
    const auto half = n / 2;
    std::vector<CollapseChannel> out;
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool lower = i < half;
        const Eigen::Index first = lower ? half : 0;
        double total = 0.0;
        std::vector<double> w(static_cast<std::size_t>(half));
        for (Eigen::Index k = 0; k < half; ++k) {
            w[k] = orbital_flip_weight(ground.states.col(first + k), ground.states.col(i));
            total += w[k];
        }
        if (!(total > 0)) continue;
        for (Eigen::Index k = 0; k < half; ++k) {
            const Eigen::Index j = first + k;
            if (w[k] <= 0) continue;
            const double gap = ground.energies(j) - ground.energies(i);
            if (gap == 0) continue;
            const double rate = gap > 0 ? gamma_plus(model, gap, temp) : gamma_minus(model, -gap, temp);
            if (rate > 0) out.push_back({ket_bra(n, j, i), rate * w[k] / total, false});
        }
    }
    return out;
}

ExcitedRates excited_rates_for_t2(double t2_lower, double t2_upper, double gamma_rad) {
    require(t2_lower > 0 && t2_upper > 0 && gamma_rad >= 0, "coherence times must be > 0");
    ExcitedRates r;
    r.pure_dephasing = 1.0 / t2_lower - 0.5 * gamma_rad;
    r.gamma_43 = 2.0 * (1.0 / t2_upper - 1.0 / t2_lower);
    if (r.pure_dephasing < 0)
        throw InvalidParameter("lower excited coherence time exceeds the radiative limit 2/gamma_rad");
    if (r.gamma_43 < 0) throw InvalidParameter("upper excited coherence time must not exceed the lower one");
    return r;
}

int count_peaks(const std::vector<double>& ys, double prominence) {
    int count = 0;
    const std::size_t n = ys.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(ys[i] > ys[i - 1] && ys[i] >= ys[i + 1])) continue;
        double left = ys[i];
        for (std::size_t j = i; j-- > 0;) {
            if (ys[j] > ys[i]) break;
            left = std::min(left, ys[j]);
        }
        double right = ys[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            if (ys[j] > ys[i]) break;
            right = std::min(right, ys[j]);
        }
        if (ys[i] - std::max(left, right) >= prominence) ++count;
    }
    return count;
}

// ---------------------------------------------------------------- runners

ProtocolResult run_optical_pumping_t1(const ProtocolConfig& cfg) {
    cfg.validate();
    require(cfg.pulse_duration > 0, "optical_pumping_t1 needs pulse_duration > 0");
    const double delta = ground_branch_splitting(ground_eigensystem(cfg));

    LevelSystem dark = optical_four_level(cfg.params);
    add_two_level_phonons(dark, cfg.phonon, delta, cfg.temperature);
    LevelSystem pump = dark;
    const auto [g, e] = line_levels("D");
    pump.drives.push_back(constant_drive(ket_bra(4, e, g), cfg.rabi));

    const CMatrix start = dark_start(dark, {0, 1});
    const double unpumped = window_fluorescence(pump, start, cfg.readout_window, cfg.tol);
    CMatrix rho = propagate(pump, start, 0.0, cfg.pulse_duration, cfg.tol);

    ProtocolResult r = make_result(cfg, "delay_s", "readout_photons");
    double t = 0.0;
    for (double tau : cfg.sweep) {
        require(tau >= 0, "delays must be >= 0");
        rho = propagate(dark, rho, t, tau, cfg.tol);
        t = tau;
        r.x.push_back(tau);
        r.y.push_back(window_fluorescence(pump, rho, cfg.readout_window, cfg.tol));
    }

    require_recovery(r.y, unpumped);
    r.fit = fit_exponential(r.x, r.y);
    r.derived.emplace_back("t1", r.fit->param("tau"));
    r.derived.emplace_back("t1_sigma", r.fit->uncertainty("tau"));
    r.derived.emplace_back("t1_model", orbital_t1(cfg.phonon, delta, cfg.temperature));
    add_fit_derived(r);
    return r;
}

ProtocolResult run_spin_t1(const ProtocolConfig& cfg) {
    cfg.validate();
    require(cfg.pulse_duration > 0, "spin_t1 needs pulse_duration > 0");
    const EigenSystem gs = ground_eigensystem(cfg);
    const EigenSystem es = eigensystem(build_excited_hamiltonian(cfg.params, cfg.field));
    const TransitionTable table = transition_table(gs, es, cfg.params);
    const TransitionEntry& pump_line = table.find(cfg.pump_line);
    const TransitionEntry& read_line = table.find(cfg.read_line);

    // Levels 0..3 ground, 4..7 excited, in a frame resonant with the pump line.
    const int n = 8;
    CMatrix h0 = CMatrix::Zero(n, n);
    for (int i = 0; i < 4; ++i) {
        h0(i, i) = gs.energies(i) - gs.energies(pump_line.ground_index);
        h0(4 + i, 4 + i) = es.energies(i) - es.energies(pump_line.excited_index);
    }
    LevelSystem dark(h0);
    for (int e = 0; e < 4; ++e) {
        double total = 0.0;
        std::array<double, 4> s{};
        for (int g = 0; g < 4; ++g) {
            s[g] = dipole_strength(es.states.col(e), gs.states.col(g));
            total += s[g];
        }
        for (int g = 0; g < 4; ++g)
            if (s[g] > 0) dark.channels.push_back({ket_bra(n, g, 4 + e), cfg.params.gamma_rad * s[g] / total, true});
    }
    for (const auto& ch : phonon_channels(gs, cfg.phonon, cfg.temperature)) {
        CMatrix op = CMatrix::Zero(n, n);
        op.topLeftCorner(4, 4) = ch.op;
        dark.channels.push_back({op, ch.rate, false});
    }

    LevelSystem pump = dark;
    pump.drives.push_back(
        constant_drive(ket_bra(n, 4 + pump_line.excited_index, pump_line.ground_index), cfg.rabi));
    LevelSystem read = dark;
    read.h0 = CMatrix::Zero(n, n);
    for (int i = 0; i < 4; ++i) {
        read.h0(i, i) = gs.energies(i) - gs.energies(read_line.ground_index);
        read.h0(4 + i, 4 + i) = es.energies(i) - es.energies(read_line.excited_index);
    }
    dark.h0 = read.h0;
    read.drives.push_back(
        constant_drive(ket_bra(n, 4 + read_line.excited_index, read_line.ground_index), cfg.rabi));

    const CMatrix start = dark_start(dark, {0, 1, 2, 3});
    const double unpumped = window_fluorescence(read, start, cfg.readout_window, cfg.tol);
    CMatrix rho = propagate(pump, start, 0.0, cfg.pulse_duration, cfg.tol);

    ProtocolResult r = make_result(cfg, "delay_s", "readout_photons");
    double t = 0.0;
    for (double tau : cfg.sweep) {
        require(tau >= 0, "delays must be >= 0");
        rho = propagate(dark, rho, t, tau, cfg.tol);
        t = tau;
        r.x.push_back(tau);
        r.y.push_back(window_fluorescence(read, rho, cfg.readout_window, cfg.tol));
    }
    require_recovery(r.y, unpumped);
    r.fit = fit_exponential(r.x, r.y);
    r.derived.emplace_back("t1_spin", r.fit->param("tau"));
    r.derived.emplace_back("t1_spin_sigma", r.fit->uncertainty("tau"));
    r.derived.emplace_back("pump_line_intensity", pump_line.rel_intensity);
    add_fit_derived(r);
    return r;
}

namespace {

LevelSystem cpt_system(const ProtocolConfig& cfg, double two_photon_detuning) {
    CMatrix h0 = CMatrix::Zero(3, 3);
    h0(1, 1) = two_photon_detuning;
    LevelSystem sys(h0);
    sys.channels.push_back({ket_bra(3, 0, 2), 0.5 * cfg.params.gamma_rad, true});
    sys.channels.push_back({ket_bra(3, 1, 2), 0.5 * cfg.params.gamma_rad, true});
    if (cfg.spin_dephasing > 0) sys.channels.push_back({projector(3, 1), cfg.spin_dephasing, false});
    if (cfg.laser_linewidth > 0) sys.channels.push_back({projector(3, 1), cfg.laser_linewidth, false});
    const double rabi_2 = cfg.rabi_2 > 0 ? cfg.rabi_2 : cfg.rabi;
    sys.drives.push_back(constant_drive(ket_bra(3, 2, 0), cfg.rabi));
    sys.drives.push_back(constant_drive(ket_bra(3, 2, 1), rabi_2));
    return sys;
}

// Full width at half depth of the dip around the minimum, by linear interpolation.
double half_depth_width(const std::vector<double>& x, const std::vector<double>& y, std::size_t imin,
                        double top) {
    const double level = 0.5 * (y[imin] + top);
    auto cross = [&](int dir) {
        long i = static_cast<long>(imin);
        while (i + dir >= 0 && i + dir < static_cast<long>(y.size()) && y[i] < level) i += dir;
        const long j = i - dir;
        if (y[i] == y[j]) return x[i];
        return x[j] + (level - y[j]) * (x[i] - x[j]) / (y[i] - y[j]);
    };
    return std::abs(cross(+1) - cross(-1));
}

}  // namespace

ProtocolResult run_cpt_scan(const ProtocolConfig& cfg) {
    cfg.validate();
    require(cfg.rabi > 0, "cpt_scan needs rabi > 0");
    ProtocolResult r = make_result(cfg, "two_photon_detuning_hz", "fluorescence_norm");
    std::vector<double> raw;
    for (double delta : cfg.sweep) {
        const LevelSystem sys = cpt_system(cfg, delta);
        r.x.push_back(hertz(delta));
        raw.push_back(fluorescence_rate(sys, steady_state(sys)));
    }
    const double peak = *std::max_element(raw.begin(), raw.end());
    require(peak > 0, "cpt_scan produced no fluorescence");
    for (double v : raw) r.y.push_back(v / peak);
    r.extra_columns.emplace_back("fluorescence_rate", raw);

    const auto imin = static_cast<std::size_t>(std::min_element(r.y.begin(), r.y.end()) - r.y.begin());
    const double dip_top = *std::max_element(r.y.begin(), r.y.end());
    double dip_w = half_depth_width(r.x, r.y, imin, dip_top);
    if (!(dip_w > 0)) dip_w = std::abs(r.x[1] - r.x[0]);
    const double x_span = r.x.back() - r.x.front();
    const double gamma_hz = hertz(cfg.params.gamma_rad);

    Eigen::VectorXd guess(7);
    guess << 0.0, dip_top, r.x[imin], std::max(gamma_hz, x_span), -(dip_top - r.y[imin]), r.x[imin], dip_w;
    r.fit = fit_lorentzian_sum(r.x, r.y, guess);
    // The dip is the component with negative amplitude.
    const int dip = r.fit->param("amplitude_1") < 0 ? 1 : 0;
    const std::string k = std::to_string(dip);
    r.derived.emplace_back("dip_fwhm", std::abs(r.fit->param("fwhm_" + k)));
    r.derived.emplace_back("dip_fwhm_sigma", r.fit->uncertainty("fwhm_" + k));
    r.derived.emplace_back("dip_center", r.fit->param("center_" + k));
    r.derived.emplace_back("dip_contrast", 1.0 - r.y[imin] / dip_top);
    add_fit_derived(r);
    return r;
}

double tune_cpt_rabi(ProtocolConfig cfg, double target_fwhm) {
    require(target_fwhm > 0, "target dip width must be > 0");
    cfg.spin_dephasing = 0.0;
    cfg.laser_linewidth = 0.0;
    cfg.rabi_2 = 0.0;
    cfg.sweep = scaled(linspace(-12.0 * target_fwhm, 12.0 * target_fwhm, 241), two_pi);
    auto width = [&](double rabi) {
        cfg.rabi = rabi;
        try {
            return run_cpt_scan(cfg).value("dip_fwhm");
        } catch (const FitError&) {
            return 0.0;
        }
    };
    // Dip width grows monotonically with drive power.
    double lo = std::log(angular(0.1e6)), hi = std::log(angular(500e6));
    require(width(std::exp(hi)) > target_fwhm, "target dip width is not reachable");
    for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (width(std::exp(mid)) < target_fwhm)
            lo = mid;
        else
            hi = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

ProtocolResult run_odmr_scan(const ProtocolConfig& cfg) {
    cfg.validate();
    const bool nuclear = cfg.hyperfine;
    const EigenSystem gs = ground_eigensystem(cfg, nuclear);
    const int n = nuclear ? 4 : 2;
    const CMatrix v = gs.states.leftCols(n);
    const CMatrix sz = v.adjoint() * spin_operator(3, nuclear) * v;
    const CMatrix sx = v.adjoint() * spin_operator(1, nuclear) * v;

    std::vector<bool> up(n);
    for (int i = 0; i < n; ++i) up[i] = sz(i, i).real() > 0;
    // MW raising part between the spin groups, normalised to its largest element.
    CMatrix coupling = CMatrix::Zero(n, n);
    double cmax = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (up[j] && !up[i]) {
                coupling(j, i) = sx(j, i);
                cmax = std::max(cmax, std::abs(sx(j, i)));
            }
    if (!(cmax > 1e-12)) throw NumericalError("MW field does not couple the lower spin levels");
    coupling /= cmax;

    std::vector<double> lines;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (std::abs(coupling(j, i)) > 1e-3) lines.push_back(gs.energies(j) - gs.energies(i));
    std::sort(lines.begin(), lines.end());
    double centre = 0.0;
    for (double w : lines) centre += w;
    centre /= static_cast<double>(lines.size());

    const double t_pulse = cfg.pulse_duration > 0 ? cfg.pulse_duration : (cfg.rabi > 0 ? pi / cfg.rabi : 0.0);
    CMatrix rho0 = CMatrix::Zero(n, n);
    int n_down = 0;
    for (int i = 0; i < n; ++i) n_down += up[i] ? 0 : 1;
    for (int i = 0; i < n; ++i)
        if (!up[i]) rho0(i, i) = 1.0 / n_down;

    ProtocolResult r = make_result(cfg, "mw_frequency_hz", "spin_flip_probability");
    for (double delta : cfg.sweep) {
        const double w_mw = centre + delta;
        CMatrix h0 = CMatrix::Zero(n, n);
        for (int i = 0; i < n; ++i) h0(i, i) = gs.energies(i) - gs.energies(0) - (up[i] ? w_mw : 0.0);
        LevelSystem sys(h0);
        sys.drives.push_back(constant_drive(coupling, cfg.rabi));
        const CMatrix rho = t_pulse > 0 ? propagate(sys, rho0, 0.0, t_pulse, cfg.tol) : rho0;
        double p_up = 0.0;
        for (int i = 0; i < n; ++i)
            if (up[i]) p_up += population(rho, i);
        r.x.push_back(hertz(w_mw));
        r.y.push_back(p_up);
    }

    for (std::size_t k = 0; k < lines.size(); ++k)
        r.derived.emplace_back("predicted_line_" + std::to_string(k), hertz(lines[k]));
    if (span(r.y) < 1e-9) {
        r.warnings.push_back("no resonance: MW drive produced no spin flips");
        return r;
    }
    Eigen::VectorXd guess(1 + 3 * static_cast<Eigen::Index>(lines.size()));
    guess(0) = 0.0;
    const double width_guess = cfg.rabi > 0 ? hertz(cfg.rabi) : 1e6;
    for (std::size_t k = 0; k < lines.size(); ++k)
        guess.segment<3>(1 + 3 * static_cast<Eigen::Index>(k)) << *std::max_element(r.y.begin(), r.y.end()),
            hertz(lines[k]), width_guess;
    r.fit = fit_lorentzian_sum(r.x, r.y, guess);
    std::vector<double> centres;
    for (std::size_t k = 0; k < lines.size(); ++k) centres.push_back(r.fit->param("center_" + std::to_string(k)));
    std::sort(centres.begin(), centres.end());
    for (std::size_t k = 0; k < centres.size(); ++k)
        r.derived.emplace_back("line_" + std::to_string(k), centres[k]);
    r.derived.emplace_back("lines", static_cast<double>(centres.size()));
    if (centres.size() >= 2) r.derived.emplace_back("splitting", centres.back() - centres.front());
    add_fit_derived(r);
    return r;
}

namespace {

// Ground four-level system in the frame of a MW field near the 0-1 transition.
LevelSystem mw_system(const ProtocolConfig& cfg, const EigenSystem& gs, double level1_detuning) {
    CMatrix h0 = CMatrix::Zero(4, 4);
    h0(1, 1) = level1_detuning;
    h0(2, 2) = gs.energies(2) - gs.energies(0);
    h0(3, 3) = gs.energies(3) - gs.energies(0);
    LevelSystem sys(h0);
    sys.channels = phonon_channels(gs, cfg.phonon, cfg.temperature);
    return sys;
}

}  // namespace

ProtocolResult run_mw_rabi(const ProtocolConfig& cfg) {
    cfg.validate();
    const EigenSystem gs = ground_eigensystem(cfg);
    LevelSystem sys = mw_system(cfg, gs, 0.0);
    sys.drives.push_back(constant_drive(ket_bra(4, 1, 0), cfg.rabi));

    EvolveOptions opt;
    opt.tol = cfg.tol;
    opt.output_times = cfg.sweep;
    // Spin prepared in level 0 with the orbital branches already in thermal
    // equilibrium, so an undriven trace stays flat.
    CMatrix rho0 = basis_state(4, 0);
    const double t1 = orbital_t1(cfg.phonon, ground_branch_splitting(gs), cfg.temperature);
    if (std::isfinite(t1)) rho0 = propagate(mw_system(cfg, gs, 0.0), rho0, 0.0, 40.0 * t1, cfg.tol);
    const Trajectory tr = evolve(sys, rho0, std::min(0.0, cfg.sweep.front()), cfg.sweep.back(), opt);

    // The inversion P1 - P0 keeps phonon-returned population from shifting the baseline.
    ProtocolResult r = make_result(cfg, "pulse_duration_s", "inversion_10");
    r.x = tr.times;
    for (std::size_t k = 0; k < tr.size(); ++k) r.y.push_back(population(tr.rho[k], 1) - population(tr.rho[k], 0));
    r.derived.emplace_back("contrast", span(r.y));
    if (span(r.y) < 1e-9) {
        r.warnings.push_back("no oscillation: population is flat");
        return r;
    }
    r.fit = try_fit_sinusoid(r.x, r.y, r);
    if (r.fit) {
        r.derived.emplace_back("rabi_frequency", r.fit->param("frequency"));
        r.derived.emplace_back("rabi_frequency_sigma", r.fit->uncertainty("frequency"));
        r.derived.emplace_back("damping_rate", r.fit->param("rate"));
    }
    add_fit_derived(r);
    return r;
}

ProtocolResult run_mw_ramsey(const ProtocolConfig& cfg) {
    cfg.validate();
    require(cfg.rabi > 0, "mw_ramsey needs rabi > 0");
    const EigenSystem gs = ground_eigensystem(cfg);
    const LevelSystem free = mw_system(cfg, gs, cfg.detuning);
    LevelSystem pulse_x = free, pulse_mx = free;
    pulse_x.drives.push_back(constant_drive(ket_bra(4, 1, 0), cfg.rabi, 0.0));
    pulse_mx.drives.push_back(constant_drive(ket_bra(4, 1, 0), cfg.rabi, pi));
    const double t_half = cfg.pulse_duration > 0 ? cfg.pulse_duration : 0.5 * pi / cfg.rabi;

    CMatrix rho = propagate(pulse_x, basis_state(4, 0), 0.0, t_half, cfg.tol);
    ProtocolResult r = make_result(cfg, "free_evolution_s", "population_1_difference");
    double t = 0.0;
    for (double tau : cfg.sweep) {
        require(tau >= 0, "delays must be >= 0");
        rho = propagate(free, rho, t, tau, cfg.tol);
        t = tau;
        const double a = population(propagate(pulse_x, rho, 0.0, t_half, cfg.tol), 1);
        const double b = population(propagate(pulse_mx, rho, 0.0, t_half, cfg.tol), 1);
        r.x.push_back(tau);
        r.y.push_back(a - b);
    }
    r.fit = try_fit_sinusoid(r.x, r.y, r);
    if (r.fit) {
        const double rate = r.fit->param("rate");
        r.derived.emplace_back("fringe_frequency", r.fit->param("frequency"));
        r.derived.emplace_back("decay_rate", rate);
        r.derived.emplace_back("t2_star", rate > 0 ? 1.0 / rate : std::numeric_limits<double>::infinity());
        r.derived.emplace_back("t1_model", orbital_t1(cfg.phonon, ground_branch_splitting(gs), cfg.temperature));
    }
    add_fit_derived(r);
    return r;
}

ProtocolResult run_optical_rabi(const ProtocolConfig& cfg) {
    cfg.validate();
    const auto [g, e] = line_levels(cfg.transition);
    const int other = 1 - g;
    const double w = cfg.pulse_width;
    const PulseEnvelope env = PulseEnvelope::two_sided_exponential(0.0, w);

    ProtocolResult r = make_result(cfg, "pulse_area_rad", "photons_per_pulse");
    for (double area : cfg.sweep) {
        require(area >= 0, "pulse areas must be >= 0");
        LevelSystem sys = optical_four_level(cfg.params);
        Drive d = constant_drive(ket_bra(4, e, g), area / env.area());
        d.envelope = env;
        sys.drives.push_back(d);
        const CMatrix rho = propagate(sys, basis_state(4, g), -20.0 * w, 20.0 * w, cfg.tol);
        // Decays split evenly, so the undriven ground level holds half the photons emitted so far.
        r.x.push_back(area);
        r.y.push_back(population(rho, e) + 2.0 * population(rho, other));
    }

    const double contrast = span(r.y);
    const int maxima = count_peaks(r.y, 0.5 * contrast);
    r.derived.emplace_back("oscillations", static_cast<double>(maxima));
    std::vector<double> heights;
    for (std::size_t i = 1; i + 1 < r.y.size(); ++i)
        if (r.y[i] > r.y[i - 1] && r.y[i] >= r.y[i + 1] && r.y[i] > r.y.front() + 0.5 * contrast)
            heights.push_back(r.y[i]);
    if (!heights.empty())
        r.derived.emplace_back("visibility_loss", 1.0 - heights.back() / heights.front());
    if (contrast > 1e-9) {
        r.fit = try_fit_sinusoid(r.x, r.y, r);
        if (r.fit) r.derived.emplace_back("area_period", 1.0 / r.fit->param("frequency"));
    }
    add_fit_derived(r);
    return r;
}

ProtocolResult run_optical_ramsey(const ProtocolConfig& cfg) {
    cfg.validate();
    const auto [g, e] = line_levels(cfg.transition);
    const double w = cfg.pulse_width;
    const double half_window = 20.0 * w;
    require(cfg.sweep.front() >= 2.0 * half_window, "Ramsey delays must exceed 40 pulse widths");

    const ExcitedRates rates = excited_rates_for_t2(cfg.excited_t2_lower, cfg.excited_t2_upper,
                                                    cfg.params.gamma_rad);
    LevelSystem free = optical_four_level(cfg.params);
    free.h0(e, e) = cfg.detuning;
    if (rates.pure_dephasing > 0) {
        free.channels.push_back({projector(4, 2), 2.0 * rates.pure_dephasing, false});
        free.channels.push_back({projector(4, 3), 2.0 * rates.pure_dephasing, false});
    }
    if (rates.gamma_43 > 0) free.channels.push_back({ket_bra(4, 2, 3), rates.gamma_43, false});

    auto pulse = [&](double centre, double phase) {
        LevelSystem sys = free;
        const PulseEnvelope env = PulseEnvelope::two_sided_exponential(centre, w);
        Drive d = constant_drive(ket_bra(4, e, g), 0.5 * pi / env.area(), phase);
        d.envelope = env;
        sys.drives.push_back(d);
        return sys;
    };

    CMatrix rho = propagate(pulse(0.0, 0.0), basis_state(4, g), -half_window, half_window, cfg.tol);
    double t = half_window;
    ProtocolResult r = make_result(cfg, "delay_s", "excited_population_difference");
    for (double tau : cfg.sweep) {
        rho = propagate(free, rho, t, tau - half_window, cfg.tol);
        t = tau - half_window;
        const double a = population(propagate(pulse(tau, 0.0), rho, t, tau + half_window, cfg.tol), e);
        const double b = population(propagate(pulse(tau, pi), rho, t, tau + half_window, cfg.tol), e);
        r.x.push_back(tau);
        r.y.push_back(a - b);
    }
    r.derived.emplace_back("pure_dephasing", rates.pure_dephasing);
    r.derived.emplace_back("gamma_43", rates.gamma_43);
    r.fit = try_fit_sinusoid(r.x, r.y, r);
    if (r.fit) {
        const double rate = r.fit->param("rate");
        r.derived.emplace_back("fringe_frequency", r.fit->param("frequency"));
        r.derived.emplace_back("t2", rate > 0 ? 1.0 / rate : std::numeric_limits<double>::infinity());
        r.derived.emplace_back("t2_sigma", r.fit->uncertainty("rate") / (rate * rate));
    }
    add_fit_derived(r);
    return r;
}

ProtocolResult run_raman_rabi(const ProtocolConfig& cfg) {
    cfg.validate();
    require(cfg.detuning != 0, "raman_rabi needs a non-zero one-photon detuning");
    const double omega_c = cfg.rabi;
    const double omega_d = cfg.rabi_2 > 0 ? cfg.rabi_2 : cfg.rabi;

    CMatrix h0 = CMatrix::Zero(3, 3);
    h0(2, 2) = cfg.detuning;
    LevelSystem full(h0);
    full.channels.push_back({ket_bra(3, 0, 2), 0.5 * cfg.params.gamma_rad, true});
    full.channels.push_back({ket_bra(3, 1, 2), 0.5 * cfg.params.gamma_rad, true});
    full.drives.push_back(constant_drive(ket_bra(3, 2, 0), omega_c));
    full.drives.push_back(constant_drive(ket_bra(3, 2, 1), omega_d));

    const RamanDrive eff = raman_effective(omega_c, omega_d, cfg.detuning);
    LevelSystem reduced(CMatrix::Zero(2, 2));
    reduced.drives = {eff.transfer, eff.stark};

    EvolveOptions opt;
    opt.tol = cfg.tol;
    opt.output_times = cfg.sweep;
    const double t0 = std::min(0.0, cfg.sweep.front());
    const Trajectory tf = evolve(full, basis_state(3, 0), t0, cfg.sweep.back(), opt);
    const Trajectory tr = evolve(reduced, basis_state(2, 0), t0, cfg.sweep.back(), opt);

    ProtocolResult r = make_result(cfg, "duration_s", "population_2");
    r.x = tf.times;
    std::vector<double> effective;
    for (std::size_t k = 0; k < tf.size(); ++k) {
        r.y.push_back(population(tf.rho[k], 1));
        effective.push_back(population(tr.rho[k], 1));
    }
    r.extra_columns.emplace_back("population_2_effective", effective);
    if (!eff.warning.empty()) r.warnings.push_back(eff.warning);

    const double predicted = hertz(std::abs(eff.effective_rabi));
    r.derived.emplace_back("predicted_rabi_frequency", predicted);
    r.derived.emplace_back("transfer", *std::max_element(r.y.begin(), r.y.end()));
    if (span(r.y) < 1e-9) {
        r.warnings.push_back("no ground-state transfer");
        return r;
    }
    r.fit = try_fit_sinusoid(r.x, r.y, r);
    if (r.fit) {
        const double f = r.fit->param("frequency");
        r.derived.emplace_back("rabi_frequency", f);
        r.derived.emplace_back("relative_deviation", predicted > 0 ? f / predicted - 1.0 : 0.0);
    }
    add_fit_derived(r);
    return r;
}

ProtocolResult run_raman_ramsey(const ProtocolConfig& cfg) {
    cfg.validate();
    require(cfg.detuning != 0, "raman_ramsey needs a non-zero one-photon detuning");
    const double omega_c = cfg.rabi;
    const double omega_d = cfg.rabi_2 > 0 ? cfg.rabi_2 : cfg.rabi;
    const double splitting = ground_branch_splitting(ground_eigensystem(cfg));

    const RamanDrive probe = raman_effective(omega_c, omega_d, cfg.detuning);
    require(probe.effective_rabi != 0, "raman_ramsey needs non-zero Raman power");
    const double t_pulse = cfg.pulse_duration > 0 ? cfg.pulse_duration : 0.5 * pi / std::abs(probe.effective_rabi);

    CMatrix h0 = CMatrix::Zero(2, 2);
    h0(1, 1) = splitting;
    const LevelSystem free(h0);
    // Each pulse carries the two-photon beat at the ground splitting, phase referenced to its own start.
    auto pulse = [&](double start, double extra_phase) {
        const RamanDrive d = raman_effective(omega_c, omega_d, cfg.detuning,
                                             PulseEnvelope::rectangular(start, t_pulse));
        LevelSystem sys = free;
        Drive transfer = d.transfer;
        transfer.detuning = splitting;
        transfer.phase += -splitting * start + extra_phase;
        sys.drives = {transfer, d.stark};
        return sys;
    };

    CMatrix rho = propagate(pulse(0.0, 0.0), basis_state(2, 0), 0.0, t_pulse, cfg.tol);
    double t = t_pulse;
    ProtocolResult r = make_result(cfg, "gap_s", "population_2_difference");
    for (double gap : cfg.sweep) {
        require(gap >= 0, "Raman Ramsey gaps must be >= 0");
        const double start = t_pulse + gap;
        rho = propagate(free, rho, t, start, cfg.tol);
        t = start;
        const double a = population(propagate(pulse(start, 0.0), rho, start, start + t_pulse, cfg.tol), 1);
        const double b = population(propagate(pulse(start, pi), rho, start, start + t_pulse, cfg.tol), 1);
        r.x.push_back(gap);
        r.y.push_back(a - b);
    }
    if (!probe.warning.empty()) r.warnings.push_back(probe.warning);
    r.derived.emplace_back("ground_splitting", hertz(splitting));
    r.fit = try_fit_sinusoid(r.x, r.y, r);
    if (r.fit) r.derived.emplace_back("fringe_frequency", r.fit->param("frequency"));
    add_fit_derived(r);
    return r;
}

ProtocolResult run_mollow(const ProtocolConfig& cfg) {
    cfg.validate();
    const int samples = static_cast<int>(std::llround(cfg.sim_time / cfg.time_step)) + 1;
    require(samples >= 16, "mollow needs at least 16 samples");

    ProtocolResult r = make_result(cfg, "detuning_hz", "sideband_hz");
    std::vector<double> predicted, error_bins;
    double bin = 0.0;
    for (double delta : cfg.sweep) {
        CMatrix h0 = CMatrix::Zero(2, 2);
        h0(1, 1) = delta;
        LevelSystem sys(h0);
        sys.channels.push_back({ket_bra(2, 0, 1), cfg.params.gamma_rad, true});
        sys.drives.push_back(constant_drive(ket_bra(2, 1, 0), cfg.rabi));
        EvolveOptions opt;
        opt.tol = cfg.tol;
        opt.samples = samples;
        const Trajectory tr = evolve(sys, basis_state(2, 0), 0.0, (samples - 1) * cfg.time_step, opt);

        std::vector<double> pe = tr.expectation(projector(2, 1));
        double mean = 0.0;
        for (double v : pe) mean += v;
        mean /= static_cast<double>(pe.size());
        for (double& v : pe) v -= mean;
        const Spectrum s = spectrum_of_signal(tr.times, pe);
        bin = s.frequency[1] - s.frequency[0];

        const double expected = hertz(std::hypot(cfg.rabi, delta));
        const double floor_hz = 0.5 * hertz(cfg.rabi);
        double best = 0.0, best_mag = 0.0;
        for (std::size_t k = 0; k < s.frequency.size(); ++k)
            if (s.frequency[k] > floor_hz && s.frequency[k] > bin && s.magnitude[k] > best_mag) {
                best_mag = s.magnitude[k];
                best = s.frequency[k];
            }
        if (best_mag < 1e-9) best = 0.0;
        r.x.push_back(hertz(delta));
        r.y.push_back(best);
        predicted.push_back(cfg.rabi > 0 ? expected : 0.0);
        error_bins.push_back(std::abs(best - predicted.back()) / bin);
    }
    r.extra_columns.emplace_back("predicted_hz", predicted);
    r.extra_columns.emplace_back("error_bins", error_bins);
    r.derived.emplace_back("bin_width", bin);
    r.derived.emplace_back("max_error_bins", *std::max_element(error_bins.begin(), error_bins.end()));
    return r;
}

ProtocolResult run_protocol(const ProtocolConfig& cfg) {
    switch (cfg.variant) {
        case ProtocolVariant::optical_pumping_t1: return run_optical_pumping_t1(cfg);
        case ProtocolVariant::spin_t1: return run_spin_t1(cfg);
        case ProtocolVariant::cpt_scan: return run_cpt_scan(cfg);
        case ProtocolVariant::odmr_scan: return run_odmr_scan(cfg);
        case ProtocolVariant::mw_rabi: return run_mw_rabi(cfg);
        case ProtocolVariant::mw_ramsey: return run_mw_ramsey(cfg);
        case ProtocolVariant::optical_rabi: return run_optical_rabi(cfg);
        case ProtocolVariant::optical_ramsey: return run_optical_ramsey(cfg);
        case ProtocolVariant::raman_rabi: return run_raman_rabi(cfg);
        case ProtocolVariant::raman_ramsey: return run_raman_ramsey(cfg);
        case ProtocolVariant::mollow: return run_mollow(cfg);
    }
    throw InvalidParameter("unknown protocol variant");
}

}  // namespace siv
