#include "siv/photophysics.hpp"

#include <cmath>

#include "siv/constants.hpp"
#include "siv/errors.hpp"

namespace siv {

using namespace units;

namespace {

const Action hbar{PhysicalConstants::hbar};
const Permittivity eps0{PhysicalConstants::eps0};
const Velocity c_light{PhysicalConstants::c};

void require(bool ok, const char* what) {
    if (!ok) throw InvalidParameter(what);
}

// Intensity-to-field prefactor: (int E dt)^2 = P0 tau T S^2 / (pi eps0 c n sigma^2) * int f(t) dt.
auto field_prefactor(const PulseTrain& train, const FocusModel& focus, Power p) {
    const Length sigma = focal_sigma(focus.d_focus);
    const double optics = focus.t_transmission * focus.s_field_ratio * focus.s_field_ratio;
    return (p * train.rep_period * optics) / (pi * eps0 * c_light * focus.n_index * (sigma * sigma));
}

// Closed form of int exp(-2 ln2 |t| / w) dt over the real line.
Time profile_integral(Time w) { return w / std::log(2.0); }

}  // namespace

void FocusModel::validate() const {
    require(d_focus.value() > 0, "d_focus must be > 0");
    require(t_transmission > 0 && t_transmission <= 1, "T must lie in (0, 1]");
    require(s_field_ratio > 0 && s_field_ratio <= 1, "S must lie in (0, 1]");
    require(n_index > 0, "refractive index must be > 0");
}

void PulseTrain::validate() const {
    require(p_avg.value() > 0, "p_avg must be > 0");
    require(rep_period.value() > 0, "rep_period must be > 0");
    require(w_pulse.value() > 0, "w_pulse must be > 0");
    require(w_pulse < rep_period, "w_pulse must be shorter than rep_period");
}

Length focal_sigma(Length d_focus) {
    require(d_focus.value() > 0, "d_focus must be > 0");
    return d_focus / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

Intensity peak_intensity(Power p_avg, Length sigma) {
    require(sigma.value() > 0, "sigma must be > 0");
    return p_avg / (two_pi * (sigma * sigma));
}

FieldTimeIntegral integrated_field(const PulseTrain& train, const FocusModel& focus) {
    train.validate();
    focus.validate();
    return sqrt(field_prefactor(train, focus, train.p_avg) * profile_integral(train.w_pulse));
}

DipoleMoment dipole_moment(Power p_pi, const PulseTrain& train, const FocusModel& focus) {
    require(p_pi.value() > 0, "p_pi must be > 0");
    PulseTrain at_pi = train;
    at_pi.p_avg = p_pi;
    const FieldTimeIntegral e = integrated_field(at_pi, focus);
    return (pi * hbar) / e;
}

Power pi_pulse_power(DipoleMoment mu, const PulseTrain& train, const FocusModel& focus) {
    require(mu.value() > 0, "mu must be > 0");
    const FieldTimeIntegral e = (pi * hbar) / mu;
    const auto per_watt = field_prefactor(train, focus, Power(1.0)) * profile_integral(train.w_pulse);
    return Power((e * e).value() / per_watt.value());
}

Rate einstein_a(Frequency nu, DipoleMoment mu) {
    require(nu.value() > 0, "nu must be > 0");
    const auto nu3 = nu * nu * nu;
    const auto c3 = c_light * c_light * c_light;
    return (8.0 * pi * pi * nu3 * (mu * mu)) / (3.0 * eps0 * hbar * c3);
}

Time radiative_lifetime(Rate a21) {
    if (!(a21.value() > 0)) throw InvalidParameter("A21 is zero: radiative lifetime is infinite");
    return 1.0 / a21;
}

double quantum_efficiency(Time tau_fl, Time tau0) {
    require(tau_fl.value() > 0 && tau0.value() > 0, "lifetimes must be > 0");
    return tau_fl / tau0;
}

Time solve_rep_period(DipoleMoment mu_target, Power p_pi, const PulseTrain& train, const FocusModel& focus) {
    require(mu_target.value() > 0 && p_pi.value() > 0, "mu and p_pi must be > 0");
    PulseTrain unit = train;
    unit.rep_period = Time(1.0);
    unit.p_avg = p_pi;
    const FieldTimeIntegral target = (pi * hbar) / mu_target;
    const auto per_second = field_prefactor(unit, focus, p_pi) * profile_integral(train.w_pulse);
    return Time((target * target).value() / per_second.value());
}

Frequency solve_frequency(DipoleMoment mu, Time tau0) {
    require(mu.value() > 0 && tau0.value() > 0, "mu and tau0 must be > 0");
    const Rate a = 1.0 / tau0;
    const auto c3 = c_light * c_light * c_light;
    const auto nu3 = (a * 3.0 * eps0 * hbar * c3) / (8.0 * pi * pi * (mu * mu));
    return Frequency(std::cbrt(nu3.value()));
}

DipoleResult photophysics_chain(const PhotophysicsInput& in) {
    DipoleResult out;
    PulseTrain at_pi = in.train;
    at_pi.p_avg = in.p_pi;
    out.integrated_field = integrated_field(at_pi, in.focus);
    out.mu = dipole_moment(in.p_pi, in.train, in.focus);
    out.mu_debye = out.mu.value() / PhysicalConstants::debye;
    out.a21 = einstein_a(in.nu, out.mu);
    out.tau0 = radiative_lifetime(out.a21);
    out.phi = quantum_efficiency(in.tau_fl, out.tau0);
    if (out.phi > 1.0) out.warning = "quantum efficiency exceeds 1; the dipole estimate is a lower bound";
    return out;
}

}  // namespace siv
