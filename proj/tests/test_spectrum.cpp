#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "siv/errors.hpp"
#include "siv/spectrum.hpp"

using namespace siv;

namespace {

const Vector3 k111 = Vector3(1, 1, 1).normalized();
const Vector3 k001(0, 0, 1);

// Hand-written Hamiltonian in {e+up, e+down, e-up, e-down}, with the field
// split into its component along (111) and one perpendicular magnitude.
CMatrix oracle_hamiltonian(double lambda, double sign, double alpha, double beta, double b_par,
                           double b_perp, double g, double f) {
    const double z = PhysicalConstants::mu_B / PhysicalConstants::hbar;
    CMatrix h = CMatrix::Zero(4, 4);
    const double so = sign * lambda / 2.0;
    h(0, 0) = so + 0.5 * g * z * b_par + f * z * b_par;
    h(1, 1) = -so - 0.5 * g * z * b_par + f * z * b_par;
    h(2, 2) = -so + 0.5 * g * z * b_par - f * z * b_par;
    h(3, 3) = so - 0.5 * g * z * b_par - f * z * b_par;
    const Complex orb(alpha, -beta);  // alpha sx + beta sy, <e+|.|e->
    h(0, 2) = orb;
    h(1, 3) = orb;
    h(2, 0) = std::conj(orb);
    h(3, 1) = std::conj(orb);
    const double sx = 0.5 * g * z * b_perp;
    h(0, 1) += sx;
    h(1, 0) += sx;
    h(2, 3) += sx;
    h(3, 2) += sx;
    return h;
}

// Eigenvalues through the real symmetric embedding [[Re, -Im], [Im, Re]],
// whose spectrum is that of h with every value doubled.
Eigen::VectorXd oracle_eigenvalues(const CMatrix& h) {
    const Eigen::Index n = h.rows();
    Eigen::MatrixXd m(2 * n, 2 * n);
    m << h.real(), -h.imag(), h.imag(), h.real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s(m);
    Eigen::VectorXd out(n);
    for (Eigen::Index k = 0; k < n; ++k) out(k) = s.eigenvalues()(2 * k);
    return out;
}

CMatrix random_hermitian(std::mt19937& rng, int n) {
    std::normal_distribution<double> d(0, 1);
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = Complex(d(rng), d(rng));
    return 0.5 * (a + a.adjoint());
}

double spin_z(const EigenSystem& es, int k) {
    return es.states.col(k).dot(spin_operator(3) * es.states.col(k)).real();
}

}  // namespace

TEST_CASE("zero-field ground levels are two Kramers doublets split by 48 GHz") {
    SivParameters p;
    auto es = eigensystem(build_ground_hamiltonian(p, {}));
    const double scale = p.lambda_g;
    CHECK(std::abs(es.energies(1) - es.energies(0)) < 1e-12 * scale);
    CHECK(std::abs(es.energies(3) - es.energies(2)) < 1e-12 * scale);
    CHECK(hertz(es.energies(2) - es.energies(0)) == approx(48e9).epsilon(1e-12));
}

TEST_CASE("zero-field excited doublets split by 259 GHz") {
    SivParameters p;
    auto es = eigensystem(build_excited_hamiltonian(p, {}));
    CHECK(hertz(es.energies(2) - es.energies(0)) == approx(259e9).epsilon(1e-12));
}

TEST_CASE("without field or strain the Hamiltonian commutes with S_z") {
    SivParameters p;
    const CMatrix h = build_ground_hamiltonian(p, {}).h;
    const CMatrix sz = spin_operator(3);
    CHECK((h * sz - sz * h).norm() == 0.0);
}

TEST_CASE("3 T along (001) matches the hand-built oracle") {
    SivParameters p;
    const auto field = MagneticField::along(k001, 3.0);
    const double b_par = field.b.dot(k111);
    const double b_perp = (field.b - b_par * k111).norm();
    for (bool excited : {false, true}) {
        const double lambda = excited ? p.lambda_e : p.lambda_g;
        const auto m = excited ? build_excited_hamiltonian(p, field) : build_ground_hamiltonian(p, field);
        const auto es = eigensystem(m);
        const auto ref = oracle_eigenvalues(oracle_hamiltonian(lambda, -1, 0, 0, b_par, b_perp, p.g_spin, p.f_orbital));
        for (int k = 0; k < 4; ++k) CHECK(es.energies(k) == approx(ref(k)).epsilon(1e-10));
        for (int k = 0; k + 1 < 4; ++k) CHECK(es.energies(k + 1) - es.energies(k) > angular(1e9));
    }
}

TEST_CASE("strained, tilted field: library and oracle agree over random draws") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 25; ++trial) {
        SivParameters p;
        p.strain_g = {angular(40e9) * u(rng), angular(40e9) * u(rng)};
        const Vector3 axis(u(rng), u(rng), u(rng));
        const auto field = MagneticField::along(axis, 5.0 * std::abs(u(rng)));
        const double b_par = field.b.dot(k111);
        const double b_perp = (field.b - b_par * k111).norm();
        const auto es = eigensystem(build_ground_hamiltonian(p, field));
        // The oracle puts the perpendicular field on x'; rotating the spin
        // about z' leaves the spectrum unchanged.
        const auto ref = oracle_eigenvalues(oracle_hamiltonian(p.lambda_g, -1, p.strain_g.alpha, p.strain_g.beta,
                                                               b_par, b_perp, p.g_spin, p.f_orbital));
        for (int k = 0; k < 4; ++k)
            CHECK(es.energies(k) == approx(ref(k)).epsilon(1e-9).scale(p.lambda_g));
    }
}

TEST_CASE("excited builder equals ground builder with the roles of the parameters swapped") {
    SivParameters p;
    p.strain_e = {angular(12e9), angular(-5e9)};
    SivParameters q = p;
    q.lambda_g = p.lambda_e;
    q.lambda_e = 2 * p.lambda_e;
    q.strain_g = p.strain_e;
    q.so_sign_g = p.so_sign_e;
    const auto field = MagneticField::along(Vector3(0.3, -0.2, 1.0), 2.5);
    const auto a = eigensystem(build_excited_hamiltonian(p, field));
    const auto b = eigensystem(build_ground_hamiltonian(q, field));
    for (int k = 0; k < 4; ++k) CHECK(a.energies(k) == b.energies(k));
}

TEST_CASE("3 T along (111) gives pure spin eigenstates") {
    SivParameters p;
    const auto es = eigensystem(build_excited_hamiltonian(p, MagneticField::along(k111, 3.0)));
    const CMatrix sz = spin_operator(3);
    for (int k = 0; k < 4; ++k) {
        const double s = es.states.col(k).dot(sz * es.states.col(k)).real();
        CHECK(std::abs(std::abs(s) - 0.5) < 1e-10);
    }
}

TEST_CASE("non-finite inputs are rejected") {
    SivParameters p;
    MagneticField f;
    f.b = Vector3(std::nan(""), 0, 0);
    CHECK_THROWS_AS(build_ground_hamiltonian(p, f), InvalidParameter);
    p.lambda_g = INFINITY;
    CHECK_THROWS_AS(build_ground_hamiltonian(p, {}), InvalidParameter);
    SivParameters q;
    q.strain_e.alpha = std::nan("");
    CHECK_THROWS_AS(build_excited_hamiltonian(q, {}), InvalidParameter);
    CHECK_THROWS_AS(MagneticField::along(Vector3::Zero(), 1.0), InvalidParameter);
}

TEST_CASE("eigensystem of trivial matrices") {
    const auto id = eigensystem(CMatrix(CMatrix::Identity(4, 4)));
    for (int k = 0; k < 4; ++k) CHECK(id.energies(k) == 1.0);
    CHECK((id.states - CMatrix::Identity(4, 4)).norm() < 1e-14);

    CMatrix d = CMatrix::Zero(4, 4);
    for (int k = 0; k < 4; ++k) d(k, k) = k + 1.0;
    const auto ds = eigensystem(d);
    for (int k = 0; k < 4; ++k) CHECK(ds.energies(k) == approx(k + 1.0));
}

TEST_CASE("eigensystem of random Hermitian matrices: residual, orthonormality, reconstruction") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = trial % 2 ? 4 : 8;
        const CMatrix h = random_hermitian(rng, n);
        const auto es = eigensystem(h);
        const double norm = h.operatorNorm();
        for (int k = 0; k < n; ++k) {
            CHECK((h * es.states.col(k) - es.energies(k) * es.states.col(k)).norm() < 1e-9 * norm);
            if (k + 1 < n) CHECK(es.energies(k) <= es.energies(k + 1));
        }
        CHECK((es.states.adjoint() * es.states - CMatrix::Identity(n, n)).norm() < 1e-10);
        const CMatrix rebuilt = es.states * es.energies.cast<Complex>().asDiagonal() * es.states.adjoint();
        CHECK((rebuilt - h).norm() < 1e-10 * norm);
        CHECK(es.energies.sum() == approx(h.trace().real()).epsilon(1e-10).scale(norm));
    }
}

TEST_CASE("eigensystem rejects non-Hermitian and non-square input") {
    CMatrix h = CMatrix::Identity(4, 4);
    h(0, 1) = 1.0;
    CHECK_THROWS_AS(eigensystem(h), InvalidParameter);
    CHECK_THROWS_AS(eigensystem(CMatrix(CMatrix::Zero(2, 3))), DimensionMismatch);
}

TEST_CASE("zero-field table: four lines at nu0 +- (lambda_e +- lambda_g)/2") {
    SivParameters p;
    const auto t = transition_table(eigensystem(build_ground_hamiltonian(p, {})),
                                    eigensystem(build_excited_hamiltonian(p, {})), p);
    REQUIRE(t.entries.size() == 4);
    const double de = 259e9, dg = 48e9;
    const double expect[4] = {p.nu0 + (de + dg) / 2, p.nu0 + (de - dg) / 2, p.nu0 - (de - dg) / 2,
                              p.nu0 - (de + dg) / 2};
    const char* labels[4] = {"A", "B", "C", "D"};
    for (int k = 0; k < 4; ++k) {
        CHECK(t.entries[k].frequency == approx(expect[k]).epsilon(1e-12));
        CHECK(t.entries[k].label == labels[k]);
        CHECK(t.entries[k].rel_intensity == approx(1.0));
    }
    CHECK(t.entries[0].frequency - t.entries[1].frequency == approx(48e9).epsilon(1e-6));
    CHECK(t.entries[1].frequency - t.entries[2].frequency == approx(211e9).epsilon(1e-6));
    CHECK(t.entries[2].frequency - t.entries[3].frequency == approx(48e9).epsilon(1e-6));
}

TEST_CASE("4 T along (111): spin-flip lines vanish") {
    SivParameters p;
    const auto f = MagneticField::along(k111, 4.0);
    const auto t = transition_table(eigensystem(build_ground_hamiltonian(p, f)),
                                    eigensystem(build_excited_hamiltonian(p, f)), p);
    REQUIRE(t.entries.size() == 16);
    const auto gs = eigensystem(build_ground_hamiltonian(p, f));
    const auto es = eigensystem(build_excited_hamiltonian(p, f));
    int flips = 0;
    for (const auto& e : t.entries) {
        // Aligned-field eigenstates are S_z eigenstates; compare spins directly.
        if (spin_z(gs, e.ground_index) * spin_z(es, e.excited_index) < 0) {
            ++flips;
            CHECK(e.rel_intensity < 1e-8);
        } else {
            CHECK(e.rel_intensity > 0.5);
        }
    }
    CHECK(flips == 8);
}

TEST_CASE("4 T along (001): all 16 lines visible, intensities from a brute-force overlap") {
    SivParameters p;
    const auto f = MagneticField::along(k001, 4.0);
    const auto gs = eigensystem(build_ground_hamiltonian(p, f));
    const auto es = eigensystem(build_excited_hamiltonian(p, f));
    const auto t = transition_table(gs, es, p);
    REQUIRE(t.entries.size() == 16);
    // Oracle: sum over both orbital components of |<e| (|o><o| x 1) |g>|^2 summed
    // over every orbital pair, i.e. the spin overlap of the partial traces.
    double peak = 0;
    std::vector<double> raw;
    for (const auto& e : t.entries) {
        double s = 0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                Complex amp = 0;
                for (int sp = 0; sp < 2; ++sp)
                    amp += std::conj(es.states(2 * a + sp, e.excited_index)) * gs.states(2 * b + sp, e.ground_index);
                s += std::norm(amp);
            }
        raw.push_back(s);
        peak = std::max(peak, s);
    }
    for (std::size_t k = 0; k < raw.size(); ++k) {
        CHECK(t.entries[k].rel_intensity == approx(raw[k] / peak).epsilon(1e-10));
        CHECK(t.entries[k].rel_intensity > 1e-4);
    }
}

TEST_CASE("transition frequency is nu0 + (E_e - E_g)/2pi") {
    SivParameters p;
    const auto f = MagneticField::along(Vector3(1, 0, 1), 1.5);
    const auto gs = eigensystem(build_ground_hamiltonian(p, f));
    const auto es = eigensystem(build_excited_hamiltonian(p, f));
    for (const auto& e : transition_table(gs, es, p).entries)
        CHECK(e.frequency == approx(p.nu0 + hertz(es.energies(e.excited_index) - gs.energies(e.ground_index)))
                                 .epsilon(1e-15));
}

TEST_CASE("transition table rejects mismatched dimensions") {
    SivParameters p;
    const auto g4 = eigensystem(build_ground_hamiltonian(p, {}));
    const auto e8 = eigensystem(build_excited_hamiltonian(p, {}, true));
    CHECK_THROWS_AS(transition_table(g4, e8, p), DimensionMismatch);
}

TEST_CASE("zeeman map: zero-field endpoint, monotone branch splittings, aligned selection rule") {
    SivParameters p;
    const auto map = zeeman_map(p, k001, 7.0, 50);
    REQUIRE(map.size() == 50);
    CHECK(map.front().b == 0.0);
    CHECK(map.back().b == approx(7.0));
    REQUIRE(map.front().table.entries.size() == 4);
    const auto zf = transition_table(eigensystem(build_ground_hamiltonian(p, {})),
                                     eigensystem(build_excited_hamiltonian(p, {})), p);
    for (int k = 0; k < 4; ++k) CHECK(map.front().table.entries[k].frequency == zf.entries[k].frequency);

    // Splittings inside each orbital branch, read off the line table.
    std::vector<double> split[4];
    for (std::size_t i = 1; i < map.size(); ++i) {
        const auto& t = map[i].table;
        split[0].push_back(t.find("A1").frequency - t.find("A2").frequency);
        split[1].push_back(t.find("A3").frequency - t.find("A4").frequency);
        split[2].push_back(t.find("B1").frequency - t.find("A1").frequency);
        split[3].push_back(t.find("D1").frequency - t.find("C1").frequency);
        const auto f = MagneticField::along(k001, map[i].b);
        const auto gs = eigensystem(build_ground_hamiltonian(p, f));
        CHECK(split[0].back() == approx(hertz(gs.energies(1) - gs.energies(0))).epsilon(1e-6));
    }
    for (int b : {0, 2, 3})
        for (std::size_t i = 1; i < split[b].size(); ++i) CHECK(split[b][i] > split[b][i - 1]);
    // The upper ground branch rises, then closes again once the orbital
    // Zeeman term starts to cancel the spin-orbit gap: one interior maximum.
    const auto& up = split[1];
    const auto peak = std::max_element(up.begin(), up.end()) - up.begin();
    CHECK(peak > 0);
    CHECK(peak + 1 < static_cast<long>(up.size()));
    for (long i = 1; i < static_cast<long>(up.size()); ++i) {
        if (i <= peak) CHECK(up[i] > up[i - 1]);
        else CHECK(up[i] < up[i - 1]);
    }

    int flips = 0;
    for (const auto& pt : zeeman_map(p, k111, 7.0, 20)) {
        if (pt.b == 0) continue;
        const auto f = MagneticField::along(k111, pt.b);
        const auto gs = eigensystem(build_ground_hamiltonian(p, f));
        const auto es = eigensystem(build_excited_hamiltonian(p, f));
        for (const auto& e : pt.table.entries)
            if (spin_z(gs, e.ground_index) * spin_z(es, e.excited_index) < 0) {
                ++flips;
                CHECK(e.rel_intensity < 1e-8);
            }
    }
    CHECK(flips == 19 * 8);

    CHECK_THROWS_AS(zeeman_map(p, Vector3::Zero(), 7.0, 10), InvalidParameter);
}

TEST_CASE("built Hamiltonians are Hermitian and trace-consistent for random inputs") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 30; ++trial) {
        SivParameters p;
        p.strain_g = {angular(30e9) * u(rng), angular(30e9) * u(rng)};
        p.strain_e = {angular(60e9) * u(rng), angular(60e9) * u(rng)};
        const auto f = MagneticField::along(Vector3(u(rng), u(rng), u(rng)), 7 * std::abs(u(rng)));
        for (bool nuclear : {false, true}) {
            for (const auto& m : {build_ground_hamiltonian(p, f, nuclear), build_excited_hamiltonian(p, f, nuclear)}) {
                CHECK(m.dim() == static_cast<Eigen::Index>(m.basis_labels().size()));
                CHECK(hermiticity_defect(m.h) < 1e-12);
                const auto es = eigensystem(m);
                CHECK(es.energies.sum() == approx(m.h.trace().real()).epsilon(1e-10).scale(m.h.norm()));
            }
        }
    }
}

TEST_CASE("strain is spin-blind: zero-field levels stay doubly degenerate") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        SivParameters p;
        p.strain_g = {angular(100e9) * u(rng), angular(100e9) * u(rng)};
        const auto es = eigensystem(build_ground_hamiltonian(p, {}));
        const double scale = es.energies.cwiseAbs().maxCoeff();
        CHECK(std::abs(es.energies(1) - es.energies(0)) < 1e-12 * scale);
        CHECK(std::abs(es.energies(3) - es.energies(2)) < 1e-12 * scale);
        const double a = p.strain_g.alpha, b = p.strain_g.beta;
        CHECK(es.energies(2) - es.energies(0) ==
              approx(std::sqrt(p.lambda_g * p.lambda_g + 4 * (a * a + b * b))).epsilon(1e-12));
    }
}

TEST_CASE("nuclear manifold: hyperfine splits each aligned-field level by A/2 pairs") {
    SivParameters p;
    const auto f = MagneticField::along(k111, 0.2);
    const auto e4 = eigensystem(build_ground_hamiltonian(p, f));
    const auto e8 = eigensystem(build_ground_hamiltonian(p, f, true));
    REQUIRE(e8.dim() == 8);
    // Each electronic level m_s splits into m_s * m_I * A with m_I = +-1/2.
    for (int k = 0; k < 4; ++k) {
        const double lo = e8.energies(2 * k), hi = e8.energies(2 * k + 1);
        CHECK(0.5 * (lo + hi) == approx(e4.energies(k)).epsilon(1e-12));
        CHECK(hertz(hi - lo) == approx(0.5 * p.hyperfine_apar).epsilon(1e-9));
    }
}

TEST_CASE("dipole strength: identical states give one, orthogonal spins give zero") {
    CVector up = CVector::Zero(4), down = CVector::Zero(4);
    up(0) = 1;
    down(1) = 1;
    CHECK(dipole_strength(up, up) == approx(1.0));
    CHECK(dipole_strength(up, down) == 0.0);
    CHECK_THROWS_AS(dipole_strength(up, CVector(CVector::Zero(8))), DimensionMismatch);
}
