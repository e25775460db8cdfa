#include "siv/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "siv/errors.hpp"

namespace siv {

namespace {

bool finite(const Vector3& v) { return v.allFinite(); }

CMatrix spin_identity(bool nuclear) {
    return CMatrix::Identity(nuclear ? 4 : 2, nuclear ? 4 : 2);
}

Manifold build_manifold(double lambda, double so_sign, const StrainPair& strain,
                        const SivParameters& p, const MagneticField& field, bool nuclear) {
    p.validate();
    if (!finite(field.b)) throw InvalidParameter("magnetic field has non-finite components");
    if (!std::isfinite(strain.alpha) || !std::isfinite(strain.beta))
        throw InvalidParameter("strain components must be finite");

    const Vector3 b = defect_frame() * field.b;
    const double zeeman = PhysicalConstants::mu_B / PhysicalConstants::hbar;  // rad/s/T

    const CMatrix lz = orbital_operator(3, nuclear);
    CMatrix h = so_sign * (lambda / 2.0) * lz * (2.0 * spin_operator(3, nuclear));
    h += strain.alpha * orbital_operator(1, nuclear) + strain.beta * orbital_operator(2, nuclear);
    for (int k = 1; k <= 3; ++k) h += zeeman * p.g_spin * b(k - 1) * spin_operator(k, nuclear);
    h += zeeman * p.f_orbital * b(2) * lz;
    if (nuclear) h += angular(p.hyperfine_apar) * spin_operator(3, true) * nuclear_operator(3);

    return Manifold{0.5 * (h + h.adjoint()), nuclear};
}

// Sort ascending and fix the phase so the largest component is real positive.
EigenSystem canonicalise(const Eigen::VectorXd& values, const CMatrix& vectors) {
    const Eigen::Index d = values.size();
    std::vector<Eigen::Index> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return values(a) < values(b); });

    EigenSystem out{Eigen::VectorXd(d), CMatrix(d, d)};
    for (Eigen::Index k = 0; k < d; ++k) {
        out.energies(k) = values(order[k]);
        CVector v = vectors.col(order[k]);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        v *= std::conj(v(imax)) / std::abs(v(imax));
        v(imax) = std::abs(v(imax));
        out.states.col(k) = v;
    }
    return out;
}

bool kramers_degenerate(const Eigen::VectorXd& e, double tol) {
    if (e.size() % 2 != 0) return false;
    for (Eigen::Index k = 0; k + 1 < e.size(); k += 2)
        if (std::abs(e(k + 1) - e(k)) > tol) return false;
    return true;
}

}  // namespace

void SivParameters::validate() const {
    auto check = [](bool ok, const char* what) {
        if (!ok) throw InvalidParameter(what);
    };
    check(std::isfinite(lambda_g) && lambda_g > 0, "lambda_g must be finite and > 0");
    check(std::isfinite(lambda_e) && lambda_e > lambda_g, "lambda_e must be finite and > lambda_g");
    check(std::isfinite(gamma_rad) && gamma_rad > 0, "gamma_rad must be finite and > 0");
    check(std::isfinite(nu0) && nu0 > 0, "nu0 must be finite and > 0");
    check(std::isfinite(g_spin) && std::isfinite(f_orbital), "g factors must be finite");
    check(std::isfinite(hyperfine_apar), "hyperfine_apar must be finite");
    check(std::abs(so_sign_g) == 1.0 && std::abs(so_sign_e) == 1.0, "spin-orbit signs must be +1 or -1");
}

MagneticField MagneticField::along(const Vector3& axis, double tesla) {
    const double n = axis.norm();
    if (!(n > 0) || !std::isfinite(n)) throw InvalidParameter("field axis must be a non-zero finite vector");
    if (!std::isfinite(tesla)) throw InvalidParameter("field magnitude must be finite");
    return MagneticField{axis / n * tesla};
}

Eigen::Matrix3d defect_frame() {
    Eigen::Matrix3d r;
    r.row(0) = Vector3(1, 1, -2).normalized();
    r.row(1) = Vector3(-1, 1, 0).normalized();
    r.row(2) = Vector3(1, 1, 1).normalized();
    return r;
}

std::vector<std::string> Manifold::basis_labels() const {
    std::vector<std::string> labels;
    for (const char* o : {"e+", "e-"})
        for (const char* s : {"up", "down"}) {
            if (nuclear) {
                labels.push_back(std::string(o) + s + ",I-up");
                labels.push_back(std::string(o) + s + ",I-down");
            } else {
                labels.push_back(std::string(o) + s);
            }
        }
    return labels;
}

const TransitionEntry& TransitionTable::find(const std::string& label) const {
    for (const auto& e : entries)
        if (e.label == label) return e;
    throw InvalidParameter("no transition labelled " + label);
}

CMatrix orbital_operator(int k, bool nuclear) {
    return kron(pauli(k), spin_identity(nuclear));
}

CMatrix spin_operator(int k, bool nuclear) {
    CMatrix s = kron(pauli(0), CMatrix(0.5 * pauli(k)));
    if (nuclear) s = kron(s, pauli(0));
    return s;
}

CMatrix nuclear_operator(int k) {
    return kron(kron(pauli(0), pauli(0)), CMatrix(0.5 * pauli(k)));
}

Manifold build_ground_hamiltonian(const SivParameters& params, const MagneticField& field,
                                  bool nuclear) {
    return build_manifold(params.lambda_g, params.so_sign_g, params.strain_g, params, field, nuclear);
}

Manifold build_excited_hamiltonian(const SivParameters& params, const MagneticField& field,
                                   bool nuclear) {
    return build_manifold(params.lambda_e, params.so_sign_e, params.strain_e, params, field, nuclear);
}

EigenSystem eigensystem(const CMatrix& h) {
    if (h.rows() != h.cols() || h.rows() == 0) throw DimensionMismatch("Hamiltonian must be square");
    if (!h.allFinite()) throw InvalidParameter("Hamiltonian has non-finite entries");
    if (!is_hermitian(h, 1e-12)) throw InvalidParameter("Hamiltonian is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
    return canonicalise(solver.eigenvalues(), solver.eigenvectors());
}

EigenSystem eigensystem(const Manifold& m) { return eigensystem(m.h); }

double dipole_strength(const CVector& excited, const CVector& ground) {
    if (excited.size() != ground.size() || excited.size() % 2 != 0)
        throw DimensionMismatch("dipole_strength: state dimensions differ");
    const Eigen::Index ns = excited.size() / 2;
    double total = 0.0;
    for (int p = 0; p < 4; ++p) {
        const CMatrix d = kron(CMatrix(pauli(p) / std::sqrt(2.0)), CMatrix::Identity(ns, ns));
        total += std::norm(excited.dot(d * ground));
    }
    return total;
}

double orbital_flip_weight(const CVector& to, const CVector& from) {
    if (to.size() != from.size() || to.size() % 2 != 0)
        throw DimensionMismatch("orbital_flip_weight: state dimensions differ");
    const bool nuclear = to.size() == 8;
    const double wx = std::norm(to.dot(orbital_operator(1, nuclear) * from));
    const double wy = std::norm(to.dot(orbital_operator(2, nuclear) * from));
    return 0.5 * (wx + wy);
}

TransitionTable transition_table(const EigenSystem& ground, const EigenSystem& excited,
                                 const SivParameters& params) {
    if (ground.dim() != excited.dim() || ground.states.rows() != excited.states.rows())
        throw DimensionMismatch("ground and excited eigensystems differ in dimension");

    const int d = static_cast<int>(ground.dim());
    std::vector<TransitionEntry> raw;
    raw.reserve(d * d);
    for (int e = 0; e < d; ++e)
        for (int g = 0; g < d; ++g) {
            TransitionEntry t;
            t.ground_index = g;
            t.excited_index = e;
            t.frequency = params.nu0 + hertz(excited.energies(e) - ground.energies(g));
            t.rel_intensity = dipole_strength(excited.states.col(e), ground.states.col(g));
            t.label = std::string(1, static_cast<char>('A' + e)) + std::to_string(g + 1);
            raw.push_back(t);
        }

    TransitionTable table;
    const double tol = angular(kMergeToleranceHz);
    if (kramers_degenerate(ground.energies, tol) && kramers_degenerate(excited.energies, tol)) {
        std::sort(raw.begin(), raw.end(),
                  [](const auto& a, const auto& b) { return a.frequency > b.frequency; });
        for (const auto& t : raw) {
            if (!table.entries.empty() &&
                std::abs(table.entries.back().frequency - t.frequency) < kMergeToleranceHz) {
                auto& merged = table.entries.back();
                if (t.rel_intensity > merged.rel_intensity) {
                    merged.ground_index = t.ground_index;
                    merged.excited_index = t.excited_index;
                }
                merged.rel_intensity += t.rel_intensity;
            } else {
                table.entries.push_back(t);
            }
        }
        // Zero-field lines are named A, B, C, ... by descending frequency.
        for (std::size_t k = 0; k < table.entries.size(); ++k)
            table.entries[k].label = std::string(1, static_cast<char>('A' + k));
    } else {
        table.entries = std::move(raw);
    }

    double peak = 0.0;
    for (const auto& t : table.entries) peak = std::max(peak, t.rel_intensity);
    if (peak > 0)
        for (auto& t : table.entries) t.rel_intensity /= peak;
    return table;
}

std::vector<ZeemanPoint> zeeman_map(const SivParameters& params, const Vector3& field_axis,
                                    double b_max, int steps) {
    if (steps < 2) throw InvalidParameter("zeeman_map needs at least 2 steps");
    if (!(field_axis.norm() > 0)) throw InvalidParameter("zeeman_map field axis has zero length");
    if (!std::isfinite(b_max) || b_max < 0) throw InvalidParameter("b_max must be finite and >= 0");

    std::vector<ZeemanPoint> out;
    out.reserve(steps);
    for (int k = 0; k < steps; ++k) {
        const double b = b_max * k / (steps - 1);
        const auto field = MagneticField::along(field_axis, b);
        const auto gs = eigensystem(build_ground_hamiltonian(params, field));
        const auto es = eigensystem(build_excited_hamiltonian(params, field));
        out.push_back({b, transition_table(gs, es, params)});
    }
    return out;
}

}  // namespace siv
