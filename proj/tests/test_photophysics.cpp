#include "test_util.hpp"

#include <cmath>
#include <type_traits>

#include "siv/constants.hpp"
#include "siv/errors.hpp"
#include "siv/photophysics.hpp"

using namespace siv;
using namespace siv::units;
using namespace siv::units::literals;

namespace {

const double debye = 3.33564e-30;

// Oracle constants, written out independently of the library.
const double hbar_o = 1.054571817e-34, eps0_o = 8.8541878128e-12, c_o = 299792458.0;

double oracle_sigma(double d) { return d / (2 * std::sqrt(2 * std::log(2.0))); }

// Printed closed form: sqrt(P tau T S^2 / (pi eps0 c n sigma^2) * int exp(-2 ln2 |t| / w) dt),
// with the time integral done by composite Simpson quadrature.
double quadrature_field(double p, double tau, double t, double s, double n, double d, double w) {
    const double a = 2 * std::log(2.0) / w;
    const double upper = 60 / a;
    const int m = 200000;
    const double h = upper / m;
    double half = 0;
    for (int k = 0; k <= m; ++k) {
        const double f = std::exp(-a * k * h);
        half += f * (k == 0 || k == m ? 1 : (k % 2 ? 4 : 2));
    }
    half *= h / 3;
    const double sig = oracle_sigma(d);
    return std::sqrt(p * tau * t * s * s / (3.141592653589793 * eps0_o * c_o * n * sig * sig) * 2 * half);
}

}  // namespace

static_assert(std::is_same_v<decltype(focal_sigma(1.0_m)), Length>);
static_assert(std::is_same_v<decltype(peak_intensity(1.0_W, 1.0_m)), Intensity>);
static_assert(std::is_same_v<decltype(integrated_field(PulseTrain{}, FocusModel{})), FieldTimeIntegral>);
static_assert(std::is_same_v<decltype(dipole_moment(1.0_W, PulseTrain{}, FocusModel{})), DipoleMoment>);
static_assert(std::is_same_v<decltype(einstein_a(1.0_Hz, DipoleMoment{})), Rate>);
static_assert(std::is_same_v<decltype(radiative_lifetime(Rate{1.0})), Time>);
static_assert(std::is_same_v<decltype(quantum_efficiency(1.0_ns, 1.0_ns)), double>);
static_assert(std::is_same_v<decltype(Action{} / DipoleMoment{}), FieldTimeIntegral>);

TEST_CASE("focal sigma") {
    CHECK(focal_sigma(862.0_nm).value() == approx(366.05e-9).epsilon(1e-4));
    CHECK(focal_sigma(893.0_nm).value() == approx(379.2e-9).epsilon(1e-3));
    CHECK(focal_sigma(Length(2 * std::sqrt(2 * std::log(2.0)))).value() == approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(focal_sigma(Length(0.0)), InvalidParameter);
}

TEST_CASE("peak intensity") {
    CHECK(peak_intensity(1.0_W, Length(1 / std::sqrt(two_pi))).value() == approx(1.0).epsilon(1e-15));
    const Length s = focal_sigma(862.0_nm);
    const double i = peak_intensity(817.0_nW, s).value();
    CHECK(i == approx(817e-9 / (2 * 3.141592653589793 * oracle_sigma(862e-9) * oracle_sigma(862e-9))).epsilon(1e-12));
    CHECK(peak_intensity(1634.0_nW, s).value() == approx(2 * i).epsilon(1e-15));
}

TEST_CASE("integrated field: closed form equals the quadrature of the printed expression") {
    PulseTrain train;
    FocusModel unit{862.0_nm, 1.0, 1.0, 1.0};
    const double q = quadrature_field(train.p_avg.value(), train.rep_period.value(), 1, 1, 1, 862e-9, 12e-12);
    CHECK(integrated_field(train, unit).value() == approx(q).epsilon(1e-6));

    FocusModel ref;
    const double q2 = quadrature_field(train.p_avg.value(), train.rep_period.value(), 0.68, 0.57, 2.4, 862e-9, 12e-12);
    CHECK(integrated_field(train, ref).value() == approx(q2).epsilon(1e-6));

    PulseTrain quad = train;
    quad.p_avg = train.p_avg * 4.0;
    CHECK(integrated_field(quad, ref).value() == approx(2 * integrated_field(train, ref).value()).epsilon(1e-14));
}

TEST_CASE("reference chain: 14.3 D, 6.24 ns, 29.6 percent") {
    const auto r = photophysics_chain(PhotophysicsInput{});
    CHECK(r.mu_debye == approx(14.3).epsilon(0.02));
    CHECK(r.tau0.value() == approx(6.24e-9).epsilon(0.01));
    CHECK(std::abs(r.phi - 0.296) < 0.005);
    CHECK(r.warning.empty());
    CHECK(r.integrated_field.value() == approx(3.141592653589793 * hbar_o / (14.3 * debye)).epsilon(0.02));
}

TEST_CASE("dipole moment scaling and inversion") {
    PulseTrain train;
    FocusModel focus;
    const double mu = dipole_moment(817.0_nW, train, focus).value();
    CHECK(dipole_moment(Power(4 * 817e-9), train, focus).value() == approx(mu / 2).epsilon(1e-14));
    CHECK(pi_pulse_power(DipoleMoment(mu), train, focus).value() == approx(817e-9).epsilon(1e-12));
    CHECK(pi_pulse_power(DipoleMoment(14.3 * debye), train, focus).value() == approx(817e-9).epsilon(0.02));
    double prev = INFINITY;
    for (double p = 100e-9; p < 5e-6; p *= 1.5) {
        const double m = dipole_moment(Power(p), train, focus).value();
        CHECK(m < prev);
        prev = m;
    }
}

TEST_CASE("Einstein A, radiative lifetime, quantum efficiency") {
    const double nu = c_o / 737e-9;
    const double mu = 14.3 * debye;
    const double a = 8 * std::pow(3.141592653589793, 2) * nu * nu * nu * mu * mu / (3 * eps0_o * hbar_o * c_o * c_o * c_o);
    CHECK(einstein_a(Frequency(nu), DipoleMoment(mu)).value() == approx(a).epsilon(1e-12));
    CHECK(radiative_lifetime(Rate(a)).value() == approx(6.24e-9).epsilon(0.01));
    CHECK(einstein_a(Frequency(nu), DipoleMoment(0.0)).value() == 0.0);
    CHECK_THROWS_AS(radiative_lifetime(Rate(0.0)), InvalidParameter);
    CHECK(quantum_efficiency(1.85_ns, 6.24_ns) == approx(0.2965).epsilon(1e-4 / 0.2965));
    double prev = 0;
    for (double t = 0.5; t < 5; t += 0.5) {
        const double phi = quantum_efficiency(Time(t * 1e-9), 6.24_ns);
        CHECK(phi > prev);
        prev = phi;
    }
}

TEST_CASE("back-solved frequency is near 737 nm and reproduces 6.24 ns") {
    const auto nu = solve_frequency(DipoleMoment(14.3 * debye), 6.24_ns);
    CHECK(c_o / nu.value() == approx(737e-9).epsilon(2e-3));
    CHECK(radiative_lifetime(einstein_a(nu, DipoleMoment(14.3 * debye))).value() == approx(6.24e-9).epsilon(1e-12));
    CHECK(kDefaultZplFrequency == approx(nu.value()).epsilon(1e-4));
}

TEST_CASE("back-solved period reproduces 14.3 D and is a plausible ps-laser period") {
    PulseTrain train;
    FocusModel focus;
    const auto tau = solve_rep_period(DipoleMoment(14.3 * debye), 817.0_nW, train, focus);
    train.rep_period = tau;
    CHECK(dipole_moment(817.0_nW, train, focus).value() / debye == approx(14.3).epsilon(1e-12));
    CHECK(tau.value() == approx(PulseTrain{}.rep_period.value()).epsilon(1e-9));
    // 1 / tau is a repetition rate in the tens of MHz.
    CHECK(1 / tau.value() > 10e6);
    CHECK(1 / tau.value() < 100e6);
}

TEST_CASE("phi above one is flagged, not clamped") {
    PhotophysicsInput in;
    in.tau_fl = 20.0_ns;
    const auto r = photophysics_chain(in);
    CHECK(r.phi > 1);
    CHECK_FALSE(r.warning.empty());
}

TEST_CASE("invalid inputs") {
    PulseTrain t;
    t.w_pulse = t.rep_period * 2.0;
    CHECK_THROWS_AS(t.validate(), InvalidParameter);
    FocusModel f;
    f.t_transmission = 1.2;
    CHECK_THROWS_AS(f.validate(), InvalidParameter);
    CHECK_THROWS_AS(dipole_moment(Power(0.0), PulseTrain{}, FocusModel{}), InvalidParameter);
}
