#pragma once

// Effective orbital-spin Hamiltonians of the SiV- ground and excited manifolds,
// their eigenstructure, and the optical transition table.
//
// Basis ordering is {e+, e-} (x) {up, down} [(x) {I-up, I-down}], i.e.
// {e+up, e+down, e-up, e-down} for the 4-level manifold. Spin operators are
// expressed in the defect frame whose z axis is the crystal (111) direction.

#include <string>
#include <vector>

#include "siv/constants.hpp"
#include "siv/linalg.hpp"

namespace siv {

struct StrainPair {
    double alpha = 0.0;  ///< rad/s, couples via the orbital sigma_x
    double beta = 0.0;   ///< rad/s, couples via the orbital sigma_y
};

struct SivParameters {
    double lambda_g = angular(48e9);    ///< ground spin-orbit splitting, rad/s
    double lambda_e = angular(259e9);   ///< excited spin-orbit splitting, rad/s
    StrainPair strain_g{};
    StrainPair strain_e{};
    double g_spin = 2.0;
    double f_orbital = 0.1;             ///< orbital Zeeman quenching factor
    double hyperfine_apar = 70e6;       ///< Hz, only used with a nuclear spin
    double nu0 = 406.819e12;            ///< unsplit ZPL frequency, Hz (736.9 nm)
    double gamma_rad = 1.0 / 1.85e-9;   ///< total excited-state decay rate, 1/s
    /// Sign of the spin-orbit term; -1 puts the aligned L_z S_z branch lowest.
    double so_sign_g = -1.0;
    double so_sign_e = -1.0;

    void validate() const;
};

/// Crystal-frame magnetic field in Tesla.
struct MagneticField {
    Vector3 b = Vector3::Zero();

    static MagneticField along(const Vector3& axis, double tesla);
    double magnitude() const { return b.norm(); }
};

/// Orthonormal defect frame: rows are x', y', z' with z' = (1,1,1)/sqrt(3).
Eigen::Matrix3d defect_frame();

struct Manifold {
    CMatrix h;             ///< rad/s
    bool nuclear = false;

    Eigen::Index dim() const { return h.rows(); }
    std::vector<std::string> basis_labels() const;
};

struct EigenSystem {
    Eigen::VectorXd energies;  ///< ascending, rad/s
    CMatrix states;            ///< columns are eigenvectors

    Eigen::Index dim() const { return energies.size(); }
};

struct TransitionEntry {
    int ground_index = 0;
    int excited_index = 0;
    double frequency = 0.0;      ///< absolute, Hz
    double rel_intensity = 0.0;  ///< normalised to max 1
    std::string label;
};

struct TransitionTable {
    std::vector<TransitionEntry> entries;

    const TransitionEntry& find(const std::string& label) const;
};

Manifold build_ground_hamiltonian(const SivParameters& params, const MagneticField& field,
                                  bool nuclear = false);
Manifold build_excited_hamiltonian(const SivParameters& params, const MagneticField& field,
                                   bool nuclear = false);

EigenSystem eigensystem(const Manifold& m);
EigenSystem eigensystem(const CMatrix& h);

/// Lines closer than this are merged when both manifolds are Kramers-degenerate.
inline constexpr double kMergeToleranceHz = 1e6;

TransitionTable transition_table(const EigenSystem& ground, const EigenSystem& excited,
                                 const SivParameters& params);

struct ZeemanPoint {
    double b = 0.0;  ///< Tesla
    TransitionTable table;
};

std::vector<ZeemanPoint> zeeman_map(const SivParameters& params, const Vector3& field_axis,
                                    double b_max, int steps);

// Operators on the manifold Hilbert space, useful to callers that build
// dynamical models on top of the eigenbasis.

/// Orbital Pauli operator (k = 0..3) tensored with the identity on the spins.
CMatrix orbital_operator(int k, bool nuclear = false);
/// Electron spin operator S_k = sigma_k / 2 (k = 1..3), defect frame.
CMatrix spin_operator(int k, bool nuclear = false);
/// Nuclear spin operator I_k = sigma_k / 2 (k = 1..3).
CMatrix nuclear_operator(int k);

/// Optical line strength: sum over a complete orbital operator basis of
/// |<e|D_p (x) 1_spin|g>|^2, i.e. the squared spin overlap of the two states.
double dipole_strength(const CVector& excited, const CVector& ground);

/// Relative weight of an orbital-flip (E-symmetric phonon) transition between
/// two states of one manifold: (|<j|Sx|i>|^2 + |<j|Sy|i>|^2) / 2 with S the
/// orbital Pauli operators.
double orbital_flip_weight(const CVector& to, const CVector& from);

}  // namespace siv
