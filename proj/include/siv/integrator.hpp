#pragma once

// Embedded Dormand-Prince 5(4) integrator with FSAL and step-size control,
// templated on an Eigen dense state (vector or matrix, real or complex).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace siv {

struct StepControl {
    double rtol = 1e-9;
    double atol = 1e-9;
    long max_steps = 20'000'000;
    double max_step = std::numeric_limits<double>::infinity();
};

template <typename State>
class DormandPrince45 {
public:
    using Rhs = std::function<State(double, const State&)>;

    DormandPrince45(Rhs rhs, StepControl control) : rhs_(std::move(rhs)), ctl_(control) {}

    /// Advances y from t to t_end (exactly). Returns false when the step budget
    /// runs out; y and t then hold the last accepted state.
    bool advance(State& y, double& t, double t_end) {
        if (t_end <= t) return true;
        State k1 = rhs_(t, y);
        if (!(h_ > 0)) h_ = initial_step(y, k1, t, t_end);
        while (t < t_end) {
            if (steps_ >= ctl_.max_steps) return false;
            double h = std::min({h_, ctl_.max_step, t_end - t});
            const bool last = (t + h >= t_end) || (t_end - (t + h)) < 1e-14 * std::abs(t_end);
            if (last) h = t_end - t;

            const State k2 = rhs_(t + c2 * h, y + h * (a21 * k1));
            const State k3 = rhs_(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
            const State k4 = rhs_(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
            const State k5 = rhs_(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const State k6 =
                rhs_(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            State y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const State k7 = rhs_(t + h, y_new);
            const State err =
                h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            const double scale_err = error_norm(err, y, y_new);
            ++steps_;
            if (scale_err <= 1.0 || h <= min_step(t)) {
                t = last ? t_end : t + h;
                y = std::move(y_new);
                k1 = k7;
                const double fac = scale_err == 0 ? 5.0 : 0.9 * std::pow(scale_err, -0.2);
                if (!last || fac < 1.0) h_ = h * std::clamp(fac, 0.2, 5.0);
            } else {
                h_ = h * std::max(0.2, 0.9 * std::pow(scale_err, -0.2));
            }
        }
        return true;
    }

    long steps() const { return steps_; }

private:
    double error_norm(const State& err, const State& y0, const State& y1) const {
        const auto tol = (ctl_.atol + ctl_.rtol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array());
        return (err.cwiseAbs().array() / tol).maxCoeff();
    }

    double min_step(double t) const { return 1e-14 * std::max(std::abs(t), 1e-300); }

    double initial_step(const State& y, const State& f, double t, double t_end) const {
        const double fn = f.cwiseAbs().maxCoeff();
        const double yn = std::max(y.cwiseAbs().maxCoeff(), ctl_.atol);
        double h = fn > 0 ? 0.01 * yn / fn : (t_end - t);
        return std::min(h, t_end - t);
    }

    Rhs rhs_;
    StepControl ctl_;
    double h_ = 0.0;
    long steps_ = 0;

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - b*, the difference between the 5th and embedded 4th order weights.
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace siv
