#pragma once

// Lindblad master-equation model of a driven, dissipative level system and
// its time-domain / steady-state solution.
//
//   d rho/dt = -i [H(t), rho] + sum_k rate_k (L_k rho L_k^+ - 1/2 {L_k^+ L_k, rho})
//
// with H(t) = h0 + sum_d (rabi_d env_d(t) / 2) (e^{-i(detuning_d t + phase_d)} C_d + h.c.).
// All energies are angular frequencies (rad/s), times in seconds.

#include <string>
#include <vector>

#include "siv/errors.hpp"
#include "siv/linalg.hpp"

namespace siv {

enum class EnvelopeShape { constant, rectangular, two_sided_exponential, gaussian };

/// Field-amplitude envelope with values in [0, 1].
struct PulseEnvelope {
    EnvelopeShape shape = EnvelopeShape::constant;
    double width = 0.0;       ///< s; duration (rectangular) or intensity FWHM
    double t0 = 0.0;          ///< s; start (rectangular) or centre
    double area_scale = 1.0;  ///< multiplies the whole envelope, in [0, 1]

    static PulseEnvelope constant();
    static PulseEnvelope rectangular(double start, double duration);
    /// Intensity exp(-2 ln2 |t - centre| / fwhm), field exp(-ln2 |t - centre| / fwhm).
    static PulseEnvelope two_sided_exponential(double centre, double fwhm);
    /// Intensity FWHM fwhm.
    static PulseEnvelope gaussian(double centre, double fwhm);

    double operator()(double t) const;
    /// Integral of the envelope over all time (infinite for constant).
    double area() const;
    /// Times where the envelope or its derivative is discontinuous.
    std::vector<double> breakpoints() const;
    void validate() const;
};

struct Drive {
    CMatrix coupling;        ///< dimensionless pattern, e.g. |e><g|
    double rabi = 0.0;       ///< peak Rabi frequency, rad/s
    double detuning = 0.0;   ///< rad/s, rotation of the drive phase in the chosen frame
    double phase = 0.0;      ///< rad
    PulseEnvelope envelope{};
    double linewidth = 0.0;  ///< rad/s, Lorentzian FWHM of the driving field

    CMatrix hamiltonian(double t) const;
    bool time_dependent() const;
};

struct CollapseChannel {
    CMatrix op;
    double rate = 0.0;       ///< 1/s
    bool radiative = false;  ///< counts towards the fluorescence observable
};

struct LevelSystem {
    CMatrix h0;
    std::vector<Drive> drives;
    std::vector<CollapseChannel> channels;

    explicit LevelSystem(CMatrix h = {}) : h0(std::move(h)) {}

    Eigen::Index dim() const { return h0.rows(); }
    void validate() const;
    CMatrix hamiltonian(double t) const;
    /// Declared channels plus one dephasing channel per drive with a finite linewidth.
    std::vector<CollapseChannel> effective_channels() const;
    bool time_independent() const;
    std::vector<double> breakpoints() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<CMatrix> rho;
    Eigen::MatrixXd populations;        ///< rows: time steps, cols: levels
    std::vector<double> fluorescence;   ///< 1/s, radiative channels only

    std::size_t size() const { return times.size(); }
    /// Real expectation value Tr(O rho) over the trajectory.
    std::vector<double> expectation(const CMatrix& observable) const;
};

struct TrajectoryDiagnostics {
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
    double min_fluorescence = 0.0;
};

TrajectoryDiagnostics diagnose(const Trajectory& traj);

class IntegrationFailure : public NumericalError {
public:
    IntegrationFailure(const std::string& what, CMatrix last_state, double last_time)
        : NumericalError(what), last_state(std::move(last_state)), last_time(last_time) {}
    CMatrix last_state;
    double last_time;
};

struct EvolveOptions {
    double tol = 1e-9;
    long max_steps = 20'000'000;
    /// Output times inside [t0, t1]; when empty, `samples` uniform points are used.
    std::vector<double> output_times;
    int samples = 201;
};

CMatrix lindblad_rhs(const LevelSystem& sys, const CMatrix& rho, double t);

Trajectory evolve(const LevelSystem& sys, const CMatrix& rho0, double t0, double t1,
                  const EvolveOptions& options = {});

/// State only at t1 (no trajectory bookkeeping).
CMatrix propagate(const LevelSystem& sys, const CMatrix& rho0, double t0, double t1,
                  double tol = 1e-9);

/// Column-major superoperator of the generator at time t.
CMatrix liouvillian(const LevelSystem& sys, double t = 0.0);

CMatrix steady_state(const LevelSystem& sys);

/// Instantaneous fluorescence rate sum_k rate_k <L_k^+ L_k> over radiative channels.
double fluorescence_rate(const LevelSystem& sys, const CMatrix& rho);

/// Far-detuned Lambda system reduced to an effective two-level drive on
/// levels {0, 1}. Delta is the excited-state detuning (positive: excited
/// state above the photon energy).
struct RamanDrive {
    Drive transfer;             ///< effective ground-ground coupling |1><0|
    Drive stark;                ///< diagonal AC-Stark term, envelope-modulated
    double effective_rabi;      ///< Omega_C Omega_D / (2 Delta), signed
    double stark_0, stark_1;    ///< rad/s
    bool adiabatic = true;      ///< false when |Delta| < 10 max(Omega_C, Omega_D)
    std::string warning;
};

RamanDrive raman_effective(double omega_c, double omega_d, double delta,
                           const PulseEnvelope& envelope = PulseEnvelope::constant());

struct Spectrum {
    std::vector<double> frequency;  ///< Hz, ascending, zero-centred
    std::vector<double> magnitude;  ///< |DFT| / N
};

Spectrum spectrum_of_signal(const std::vector<double>& times, const std::vector<double>& values);
Spectrum spectrum_of_trace(const Trajectory& traj, const CMatrix& observable);

}  // namespace siv
