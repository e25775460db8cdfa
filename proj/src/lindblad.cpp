#include "siv/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/FFT>

#include "siv/constants.hpp"
#include "siv/integrator.hpp"

namespace siv {

// ---------------------------------------------------------------- envelopes

PulseEnvelope PulseEnvelope::constant() { return {}; }

PulseEnvelope PulseEnvelope::rectangular(double start, double duration) {
    return {EnvelopeShape::rectangular, duration, start, 1.0};
}

PulseEnvelope PulseEnvelope::two_sided_exponential(double centre, double fwhm) {
    return {EnvelopeShape::two_sided_exponential, fwhm, centre, 1.0};
}

PulseEnvelope PulseEnvelope::gaussian(double centre, double fwhm) {
    return {EnvelopeShape::gaussian, fwhm, centre, 1.0};
}

double PulseEnvelope::operator()(double t) const {
    const double ln2 = std::log(2.0);
    switch (shape) {
        case EnvelopeShape::constant: return area_scale;
        case EnvelopeShape::rectangular: return (t >= t0 && t < t0 + width) ? area_scale : 0.0;
        case EnvelopeShape::two_sided_exponential:
            return area_scale * std::exp(-ln2 * std::abs(t - t0) / width);
        case EnvelopeShape::gaussian: {
            const double u = (t - t0) / width;
            return area_scale * std::exp(-2.0 * ln2 * u * u);
        }
    }
    return 0.0;
}

double PulseEnvelope::area() const {
    const double ln2 = std::log(2.0);
    switch (shape) {
        case EnvelopeShape::constant: return std::numeric_limits<double>::infinity();
        case EnvelopeShape::rectangular: return area_scale * width;
        case EnvelopeShape::two_sided_exponential: return area_scale * 2.0 * width / ln2;
        case EnvelopeShape::gaussian: return area_scale * width * std::sqrt(pi / (2.0 * ln2));
    }
    return 0.0;
}

std::vector<double> PulseEnvelope::breakpoints() const {
    switch (shape) {
        case EnvelopeShape::rectangular: return {t0, t0 + width};
        case EnvelopeShape::two_sided_exponential: return {t0};
        default: return {};
    }
}

void PulseEnvelope::validate() const {
    if (shape != EnvelopeShape::constant && !(width > 0))
        throw InvalidParameter("pulse envelope width must be > 0");
    if (!std::isfinite(t0)) throw InvalidParameter("pulse envelope t0 must be finite");
    if (!(area_scale >= 0 && area_scale <= 1)) throw InvalidParameter("area_scale must lie in [0, 1]");
}

// ------------------------------------------------------------------- drives

CMatrix Drive::hamiltonian(double t) const {
    const double amp = 0.5 * rabi * envelope(t);
    if (amp == 0) return CMatrix::Zero(coupling.rows(), coupling.cols());
    const Complex rot = std::exp(-I * (detuning * t + phase));
    return amp * (rot * coupling + std::conj(rot) * coupling.adjoint());
}

bool Drive::time_dependent() const {
    return envelope.shape != EnvelopeShape::constant || (detuning != 0 && rabi != 0);
}

// ------------------------------------------------------------- level system

void LevelSystem::validate() const {
    const auto d = dim();
    if (d == 0 || h0.cols() != d) throw DimensionMismatch("h0 must be a non-empty square matrix");
    if (!is_hermitian(h0, 1e-12)) throw InvalidParameter("h0 is not Hermitian");
    for (const auto& dr : drives) {
        if (dr.coupling.rows() != d || dr.coupling.cols() != d)
            throw DimensionMismatch("drive coupling dimension differs from h0");
        if (!(dr.rabi >= 0) || !std::isfinite(dr.rabi)) throw InvalidParameter("drive rabi must be >= 0");
        if (!(dr.linewidth >= 0)) throw InvalidParameter("drive linewidth must be >= 0");
        dr.envelope.validate();
    }
    for (const auto& ch : channels) {
        if (ch.op.rows() != d || ch.op.cols() != d)
            throw DimensionMismatch("collapse operator dimension differs from h0");
        if (!(ch.rate >= 0) || !std::isfinite(ch.rate)) throw InvalidParameter("collapse rate must be >= 0");
    }
}

CMatrix LevelSystem::hamiltonian(double t) const {
    CMatrix h = h0;
    for (const auto& dr : drives) h += dr.hamiltonian(t);
    return h;
}

std::vector<CollapseChannel> LevelSystem::effective_channels() const {
    std::vector<CollapseChannel> out = channels;
    for (const auto& dr : drives) {
        if (dr.linewidth <= 0) continue;
        // Dephasing of the driven coherence: projector onto the levels the
        // coupling raises into. Coherence decays at linewidth / 2.
        CMatrix p = CMatrix::Zero(dim(), dim());
        for (Eigen::Index i = 0; i < dim(); ++i)
            for (Eigen::Index j = 0; j < dim(); ++j)
                if (i != j && std::abs(dr.coupling(i, j)) > 0) p(i, i) = 1.0;
        out.push_back({p, dr.linewidth, false});
    }
    return out;
}

bool LevelSystem::time_independent() const {
    return std::none_of(drives.begin(), drives.end(), [](const Drive& d) { return d.time_dependent(); });
}

std::vector<double> LevelSystem::breakpoints() const {
    std::vector<double> out;
    for (const auto& dr : drives) {
        auto b = dr.envelope.breakpoints();
        out.insert(out.end(), b.begin(), b.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> Trajectory::expectation(const CMatrix& observable) const {
    std::vector<double> out;
    out.reserve(rho.size());
    for (const auto& r : rho) out.push_back((observable * r).trace().real());
    return out;
}

// ------------------------------------------------------------------ dynamics

namespace {

// Generator split as -i(H_eff rho - rho H_eff^+) + sum_k J_k rho J_k^+ with
// H_eff = H - i/2 sum_k rate_k L_k^+ L_k and J_k = sqrt(rate_k) L_k.
struct Generator {
    const LevelSystem& sys;
    CMatrix static_part;
    std::vector<CMatrix> jumps;
    std::vector<CollapseChannel> radiative;

    explicit Generator(const LevelSystem& s) : sys(s) {
        sys.validate();
        CMatrix k = CMatrix::Zero(sys.dim(), sys.dim());
        for (const auto& ch : sys.effective_channels()) {
            if (ch.rate == 0) continue;
            k += ch.rate * ch.op.adjoint() * ch.op;
            jumps.push_back(std::sqrt(ch.rate) * ch.op);
            if (ch.radiative) radiative.push_back(ch);
        }
        static_part = sys.h0 - 0.5 * I * k;
    }

    CMatrix operator()(double t, const CMatrix& rho) const {
        CMatrix heff = static_part;
        for (const auto& dr : sys.drives) heff += dr.hamiltonian(t);
        CMatrix a = heff * rho;
        CMatrix out = -I * (a - a.adjoint());
        for (const auto& j : jumps) out.noalias() += j * rho * j.adjoint();
        return out;
    }

    double fluorescence(const CMatrix& rho) const {
        double f = 0.0;
        for (const auto& ch : radiative)
            f += ch.rate * (ch.op.adjoint() * ch.op * rho).trace().real();
        return f;
    }
};

void check_density(const CMatrix& rho, Eigen::Index d) {
    if (rho.rows() != d || rho.cols() != d) throw DimensionMismatch("rho dimension differs from system");
    if (!rho.allFinite()) throw InvalidParameter("rho has non-finite entries");
    if (std::abs(rho.trace() - Complex(1.0)) > 1e-9) throw InvalidParameter("rho must have unit trace");
    if ((rho - rho.adjoint()).norm() > 1e-10) throw InvalidParameter("rho must be Hermitian");
}

std::vector<double> stops_between(const LevelSystem& sys, double t0, double t1,
                                  const std::vector<double>& outputs) {
    std::vector<double> stops;
    for (double b : sys.breakpoints())
        if (b > t0 && b < t1) stops.push_back(b);
    for (double o : outputs)
        if (o > t0 && o <= t1) stops.push_back(o);
    stops.push_back(t1);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
    return stops;
}

}  // namespace

CMatrix lindblad_rhs(const LevelSystem& sys, const CMatrix& rho, double t) {
    if (rho.rows() != sys.dim() || rho.cols() != sys.dim())
        throw DimensionMismatch("rho dimension differs from system");
    return Generator(sys)(t, rho);
}

double fluorescence_rate(const LevelSystem& sys, const CMatrix& rho) {
    return Generator(sys).fluorescence(rho);
}

Trajectory evolve(const LevelSystem& sys, const CMatrix& rho0, double t0, double t1,
                  const EvolveOptions& options) {
    const Generator gen(sys);
    check_density(rho0, sys.dim());
    if (!(t1 >= t0)) throw InvalidParameter("evolve requires t1 >= t0");

    std::vector<double> outputs = options.output_times;
    if (outputs.empty()) {
        const int n = std::max(2, options.samples);
        for (int k = 0; k < n; ++k) outputs.push_back(t0 + (t1 - t0) * k / (n - 1));
    }
    if (!std::is_sorted(outputs.begin(), outputs.end()))
        throw InvalidParameter("output times must be ascending");
    if (outputs.front() < t0 || outputs.back() > t1)
        throw InvalidParameter("output times must lie inside [t0, t1]");

    Trajectory traj;
    auto record = [&](double t, const CMatrix& rho) {
        traj.times.push_back(t);
        traj.rho.push_back(rho);
        traj.fluorescence.push_back(gen.fluorescence(rho));
    };

    StepControl ctl{options.tol, options.tol, options.max_steps};
    DormandPrince45<CMatrix> stepper([&gen](double t, const CMatrix& r) { return gen(t, r); }, ctl);

    CMatrix rho = rho0;
    double t = t0;
    std::size_t next_out = 0;
    while (next_out < outputs.size() && outputs[next_out] <= t0) {
        record(t0, rho);
        ++next_out;
    }
    for (double stop : stops_between(sys, t0, t1, outputs)) {
        if (!stepper.advance(rho, t, stop))
            throw IntegrationFailure("step budget exhausted before reaching t1", rho, t);
        while (next_out < outputs.size() && outputs[next_out] <= t) {
            record(outputs[next_out], rho);
            ++next_out;
        }
    }

    const auto d = sys.dim();
    traj.populations.resize(static_cast<Eigen::Index>(traj.size()), d);
    for (std::size_t k = 0; k < traj.size(); ++k)
        traj.populations.row(static_cast<Eigen::Index>(k)) = traj.rho[k].diagonal().real().transpose();
    return traj;
}

CMatrix propagate(const LevelSystem& sys, const CMatrix& rho0, double t0, double t1, double tol) {
    const Generator gen(sys);
    check_density(rho0, sys.dim());
    StepControl ctl{tol, tol};
    DormandPrince45<CMatrix> stepper([&gen](double t, const CMatrix& r) { return gen(t, r); }, ctl);
    CMatrix rho = rho0;
    double t = t0;
    for (double stop : stops_between(sys, t0, t1, {})) {
        if (!stepper.advance(rho, t, stop))
            throw IntegrationFailure("step budget exhausted before reaching t1", rho, t);
    }
    return rho;
}

TrajectoryDiagnostics diagnose(const Trajectory& traj) {
    TrajectoryDiagnostics d;
    d.min_eigenvalue = std::numeric_limits<double>::infinity();
    d.min_fluorescence = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& r = traj.rho[k];
        d.max_trace_error = std::max(d.max_trace_error, std::abs(r.trace() - Complex(1.0)));
        d.max_hermiticity_error = std::max(d.max_hermiticity_error, (r - r.adjoint()).norm());
        const CMatrix herm = 0.5 * (r + r.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
        d.min_eigenvalue = std::min(d.min_eigenvalue, es.eigenvalues().minCoeff());
        d.min_fluorescence = std::min(d.min_fluorescence, traj.fluorescence[k]);
    }
    return d;
}

CMatrix liouvillian(const LevelSystem& sys, double t) {
    const Generator gen(sys);
    const auto d = sys.dim();
    CMatrix heff = gen.static_part;
    for (const auto& dr : sys.drives) heff += dr.hamiltonian(t);
    const CMatrix id = CMatrix::Identity(d, d);
    CMatrix s = -I * kron(id, heff) + I * kron(CMatrix(heff.conjugate()), id);
    for (const auto& j : gen.jumps) s += kron(CMatrix(j.conjugate()), j);
    return s;
}

CMatrix steady_state(const LevelSystem& sys) {
    if (!sys.time_independent())
        throw InvalidParameter("steady_state requires time-independent drives");
    const auto d = sys.dim();
    const CMatrix s = liouvillian(sys);
    Eigen::BDCSVD<CMatrix> svd(s, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double scale = sv(0);
    const double tol = 1e-12 * scale;
    int kernel = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) <= tol) ++kernel;
    if (kernel > 1)
        throw DegenerateSteadyState("steady state is not unique: kernel dimension " +
                                        std::to_string(kernel),
                                    kernel);
    const CVector v = svd.matrixV().col(sv.size() - 1);
    CMatrix rho = Eigen::Map<const CMatrix>(v.data(), d, d);
    rho /= rho.trace();
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return rho;
}

RamanDrive raman_effective(double omega_c, double omega_d, double delta,
                           const PulseEnvelope& envelope) {
    if (delta == 0 || !std::isfinite(delta)) throw InvalidParameter("Raman detuning must be non-zero");
    if (!(omega_c >= 0) || !(omega_d >= 0)) throw InvalidParameter("one-photon Rabi frequencies must be >= 0");

    RamanDrive out;
    out.effective_rabi = omega_c * omega_d / (2.0 * delta);
    out.stark_0 = -omega_c * omega_c / (4.0 * delta);
    out.stark_1 = -omega_d * omega_d / (4.0 * delta);

    // Adiabatic elimination gives H_10 = -Omega_C Omega_D / (4 Delta).
    out.transfer.coupling = ket_bra(2, 1, 0);
    out.transfer.rabi = std::abs(out.effective_rabi);
    out.transfer.phase = out.effective_rabi > 0 ? pi : 0.0;
    out.transfer.envelope = envelope;

    const double smax = std::max(std::abs(out.stark_0), std::abs(out.stark_1));
    out.stark.coupling = CMatrix::Zero(2, 2);
    if (smax > 0) {
        out.stark.coupling(0, 0) = out.stark_0 / smax;
        out.stark.coupling(1, 1) = out.stark_1 / smax;
    }
    out.stark.rabi = smax;
    out.stark.envelope = envelope;

    const double ratio = std::abs(delta) / std::max({omega_c, omega_d, 1e-300});
    if (ratio < 10) {
        out.adiabatic = false;
        out.warning = "Raman detuning is less than 10x the one-photon Rabi frequency; "
                      "adiabatic elimination is inaccurate";
    }
    return out;
}

// ----------------------------------------------------------------- spectra

Spectrum spectrum_of_signal(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size() || times.size() < 4)
        throw InvalidParameter("spectrum needs at least 4 samples with matching times");
    const std::size_t n = times.size();
    const double dt = (times.back() - times.front()) / (n - 1);
    if (!(dt > 0)) throw InvalidParameter("spectrum times must increase");

    std::vector<std::complex<double>> signal(n);
    bool uniform = true;
    for (std::size_t k = 1; k < n; ++k)
        if (std::abs((times[k] - times[k - 1]) - dt) > 1e-9 * dt) uniform = false;
    if (uniform) {
        for (std::size_t k = 0; k < n; ++k) signal[k] = values[k];
    } else {
        // Linear resampling onto a uniform grid with the same span and count.
        std::size_t j = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = times.front() + dt * k;
            while (j + 2 < n && times[j + 1] < t) ++j;
            const double u = (t - times[j]) / (times[j + 1] - times[j]);
            signal[k] = values[j] + std::clamp(u, 0.0, 1.0) * (values[j + 1] - values[j]);
        }
    }

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> out;
    fft.fwd(out, signal);

    Spectrum s;
    const long ni = static_cast<long>(n);
    const long half = ni / 2;
    for (long m = -half; m < ni - half; ++m) {
        const long idx = (m + ni) % ni;
        s.frequency.push_back(static_cast<double>(m) / (ni * dt));
        s.magnitude.push_back(std::abs(out[idx]) / ni);
    }
    return s;
}

Spectrum spectrum_of_trace(const Trajectory& traj, const CMatrix& observable) {
    return spectrum_of_signal(traj.times, traj.expectation(observable));
}

}  // namespace siv
