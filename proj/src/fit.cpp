#include "siv/fit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "siv/constants.hpp"
#include "siv/errors.hpp"

namespace siv {

namespace {

void check_data(const std::vector<double>& xs, const std::vector<double>& ys, std::size_t nparams) {
    if (xs.size() != ys.size()) throw InvalidParameter("fit: xs and ys differ in length");
    if (xs.size() <= nparams) throw InvalidParameter("fit: not enough data points");
    for (std::size_t k = 0; k < xs.size(); ++k)
        if (!std::isfinite(xs[k]) || !std::isfinite(ys[k])) throw InvalidParameter("fit: non-finite data");
}

double data_range(const std::vector<double>& ys) {
    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    return *hi - *lo;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double lorentzian_sum(double x, const Eigen::VectorXd& p) {
    double y = p(0);
    for (Eigen::Index k = 1; k + 2 < p.size(); k += 3) {
        const double u = 2.0 * (x - p(k + 1)) / p(k + 2);
        y += p(k) / (1.0 + u * u);
    }
    return y;
}

double damped_sinusoid(double x, const Eigen::VectorXd& p) {
    return p(0) + p(1) * std::exp(-p(3) * x) * std::cos(two_pi * p(2) * x + p(4));
}

double exponential(double x, const Eigen::VectorXd& p) { return p(0) + p(1) * std::exp(-p(2) * x); }

}  // namespace

const char* to_string(FitModel m) {
    switch (m) {
        case FitModel::exponential: return "exponential";
        case FitModel::lorentzian_sum: return "lorentzian_sum";
        case FitModel::damped_sinusoid: return "damped_sinusoid";
    }
    return "?";
}

double FitResult::param(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return params(static_cast<Eigen::Index>(k));
    throw InvalidParameter("fit result has no parameter " + name);
}

double FitResult::uncertainty(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return sigma(static_cast<Eigen::Index>(k));
    throw InvalidParameter("fit result has no parameter " + name);
}

double FitResult::evaluate(double x) const {
    switch (model) {
        case FitModel::exponential:
            return params(0) + params(1) * std::exp(-x / params(2));
        case FitModel::lorentzian_sum: return lorentzian_sum(x, params);
        case FitModel::damped_sinusoid: return damped_sinusoid(x, params);
    }
    return 0.0;
}

FitResult least_squares(const ModelFunction& f, const std::vector<double>& xs,
                        const std::vector<double>& ys, Eigen::VectorXd p0,
                        const Eigen::VectorXd& scale, const LeastSquaresOptions& opt) {
    const auto np = p0.size();
    check_data(xs, ys, static_cast<std::size_t>(np));
    const auto n = static_cast<Eigen::Index>(xs.size());

    // Work in scaled coordinates q = p / scale so all parameters are O(1).
    const Eigen::VectorXd s = scale.cwiseAbs().cwiseMax(1e-300);
    auto residuals = [&](const Eigen::VectorXd& q) {
        const Eigen::VectorXd p = q.cwiseProduct(s);
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) r(i) = f(xs[i], p) - ys[i];
        return r;
    };
    auto jacobian = [&](const Eigen::VectorXd& q) {
        Eigen::MatrixXd j(n, np);
        for (Eigen::Index k = 0; k < np; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(q(k)));
            Eigen::VectorXd qp = q, qm = q;
            qp(k) += h;
            qm(k) -= h;
            j.col(k) = (residuals(qp) - residuals(qm)) / (2.0 * h);
        }
        return j;
    };

    Eigen::VectorXd q = p0.cwiseQuotient(s);
    Eigen::VectorXd r = residuals(q);
    if (!r.allFinite()) throw FitError("fit: initial guess gives non-finite model values");
    double cost = r.squaredNorm();
    Eigen::MatrixXd j = jacobian(q);
    Eigen::MatrixXd a = j.transpose() * j;
    Eigen::VectorXd g = j.transpose() * r;
    double mu = 1e-3 * a.diagonal().maxCoeff();
    double nu = 2.0;

    FitResult out;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        if (g.lpNorm<Eigen::Infinity>() <= 1e-300) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd damped = a;
        for (Eigen::Index k = 0; k < np; ++k) damped(k, k) += mu * std::max(a(k, k), 1e-12);
        const Eigen::VectorXd step = damped.ldlt().solve(-g);
        if (!step.allFinite()) break;
        if (step.norm() <= opt.step_tol * (q.norm() + opt.step_tol)) {
            out.converged = true;
            break;
        }
        const Eigen::VectorXd q_new = q + step;
        const Eigen::VectorXd r_new = residuals(q_new);
        const double cost_new = r_new.allFinite() ? r_new.squaredNorm() : std::numeric_limits<double>::infinity();
        Eigen::VectorXd dmu = step;
        for (Eigen::Index k = 0; k < np; ++k) dmu(k) *= mu * std::max(a(k, k), 1e-12);
        const double predicted = step.dot(dmu - g);
        const double gain = predicted > 0 ? (cost - cost_new) / predicted : -1.0;
        if (gain > 0) {
            const bool tiny = (cost - cost_new) <= 1e-15 * cost;
            q = q_new;
            r = r_new;
            cost = cost_new;
            j = jacobian(q);
            a = j.transpose() * j;
            g = j.transpose() * r;
            mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * gain - 1.0, 3));
            nu = 2.0;
            if (tiny && step.norm() <= 1e-9 * (q.norm() + 1e-9)) {
                out.converged = true;
                break;
            }
        } else {
            mu *= nu;
            nu *= 2.0;
            if (mu > 1e300) {
                out.converged = true;  // no descent direction left: at a minimum
                break;
            }
        }
    }

    out.iterations = it;
    out.params = q.cwiseProduct(s);
    out.residual_norm = std::sqrt(cost);
    out.rms = std::sqrt(cost / static_cast<double>(n));
    const double range = data_range(ys);
    const double denom = range > 0 ? range : std::max(std::abs(ys.front()), 1e-300);
    out.rel_residual = out.rms / denom;

    // Covariance s^2 (J^T J)^-1, inverted in the scaled coordinates where
    // J^T J is well conditioned, then mapped back to physical units.
    const double dof = static_cast<double>(n - np);
    const double s2 = cost / dof;
    const Eigen::MatrixXd cov_q = (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse() * s2;
    out.sigma = cov_q.diagonal().cwiseAbs().cwiseSqrt().cwiseProduct(s);
    return out;
}

double dominant_frequency(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    const double span = xs.back() - xs.front();
    double dx = span;
    for (std::size_t k = 1; k < n; ++k) dx = std::min(dx, xs[k] - xs[k - 1]);
    if (!(span > 0) || !(dx > 0)) throw InvalidParameter("periodogram needs increasing xs");
    const double m = mean(ys);
    const double df = 1.0 / (8.0 * span);
    const double fmax = 0.5 / dx;
    auto power = [&](double f) {
        std::complex<double> acc = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            acc += (ys[k] - m) * std::exp(std::complex<double>(0.0, -two_pi * f * (xs[k] - xs.front())));
        return std::norm(acc);
    };
    std::vector<double> pw;
    for (double f = 0.0; f <= fmax; f += df) pw.push_back(power(f));
    // Skip the DC lobe: start from the first local minimum.
    std::size_t start = 1;
    while (start + 1 < pw.size() && pw[start] <= pw[start - 1]) ++start;
    std::size_t best = start;
    for (std::size_t k = start; k < pw.size(); ++k)
        if (pw[k] > pw[best]) best = k;
    double f = best * df;
    if (best > 0 && best + 1 < pw.size()) {
        const double a = pw[best - 1], b = pw[best], c = pw[best + 1];
        const double denom = a - 2 * b + c;
        if (denom != 0) f += 0.5 * (a - c) / denom * df;
    }
    return f;
}

FitResult fit_exponential(const std::vector<double>& xs, const std::vector<double>& ys,
                          std::optional<Eigen::VectorXd> guess) {
    check_data(xs, ys, 3);
    const double range = data_range(ys);
    const double scale_y = std::max(std::abs(mean(ys)), range);
    if (!(range > 1e-9 * scale_y))
        throw FitError("fit_exponential: data are flat, no decay to fit", ys);

    const double span = xs.back() - xs.front();
    Eigen::VectorXd p0(3);
    if (guess) {
        p0 << (*guess)(0), (*guess)(1), 1.0 / (*guess)(2);
    } else {
        const double last = ys.back(), first = ys.front();
        // Time at which the signal has covered 1 - 1/e of its excursion.
        double tau = span / 3.0;
        const double target = last + (first - last) / std::exp(1.0);
        for (std::size_t k = 1; k < xs.size(); ++k)
            if ((ys[k - 1] - target) * (ys[k] - target) <= 0) {
                tau = std::max(xs[k] - xs.front(), span / xs.size());
                break;
            }
        const double amp = (first - last) * std::exp(xs.front() / tau);
        p0 << last, amp, 1.0 / tau;
    }
    Eigen::VectorXd sc(3);
    sc << scale_y, std::max(std::abs(p0(1)), scale_y), std::abs(p0(2));

    auto res = least_squares(exponential, xs, ys, p0, sc);
    res.model = FitModel::exponential;
    res.names = {"offset", "amplitude", "tau"};
    const double rate = res.params(2), sig_rate = res.sigma(2);
    if (!(rate > 0) || !std::isfinite(rate) || !(std::abs(res.params(1)) > 3.0 * res.sigma(1)) ||
        !(rate > 3.0 * sig_rate) || rate * span < 1e-3) {
        std::vector<double> r;
        for (std::size_t k = 0; k < xs.size(); ++k) r.push_back(exponential(xs[k], res.params) - ys[k]);
        throw FitError("fit_exponential: no significant exponential decay in the data", r);
    }
    res.params(2) = 1.0 / rate;
    res.sigma(2) = sig_rate / (rate * rate);
    return res;
}

FitResult fit_lorentzian_sum(const std::vector<double>& xs, const std::vector<double>& ys,
                             const Eigen::VectorXd& guess) {
    if (guess.size() < 4 || (guess.size() - 1) % 3 != 0)
        throw InvalidParameter("lorentzian guess must be {offset, (amp, centre, fwhm)...}");
    check_data(xs, ys, static_cast<std::size_t>(guess.size()));
    const double range = std::max(data_range(ys), 1e-300);
    const double span = xs.back() - xs.front();
    Eigen::VectorXd sc(guess.size());
    sc(0) = std::max(std::abs(guess(0)), range);
    for (Eigen::Index k = 1; k < guess.size(); k += 3) {
        sc(k) = std::max(std::abs(guess(k)), range);
        sc(k + 1) = span;
        sc(k + 2) = std::abs(guess(k + 2));
    }
    auto res = least_squares(lorentzian_sum, xs, ys, guess, sc);
    res.model = FitModel::lorentzian_sum;
    res.names = {"offset"};
    for (Eigen::Index k = 0; k < (guess.size() - 1) / 3; ++k) {
        const auto i = std::to_string(k);
        res.names.push_back("amplitude_" + i);
        res.names.push_back("center_" + i);
        res.names.push_back("fwhm_" + i);
        res.params(3 * k + 3) = std::abs(res.params(3 * k + 3));
    }
    return res;
}

FitResult fit_lorentzian_sum(const std::vector<double>& xs, const std::vector<double>& ys, int peaks) {
    if (peaks < 1) throw InvalidParameter("need at least one Lorentzian");
    check_data(xs, ys, static_cast<std::size_t>(3 * peaks + 1));
    std::vector<double> sorted = ys;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double base = sorted[sorted.size() / 2];
    std::vector<double> resid(ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) resid[k] = ys[k] - base;

    Eigen::VectorXd g(1 + 3 * peaks);
    g(0) = base;
    const double span = xs.back() - xs.front();
    for (int p = 0; p < peaks; ++p) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < resid.size(); ++k)
            if (std::abs(resid[k]) > std::abs(resid[best])) best = k;
        const double amp = resid[best];
        // Half-width from the half-maximum crossings around the peak.
        std::size_t lo = best, hi = best;
        while (lo > 0 && std::abs(resid[lo]) > 0.5 * std::abs(amp)) --lo;
        while (hi + 1 < resid.size() && std::abs(resid[hi]) > 0.5 * std::abs(amp)) ++hi;
        const double w = std::max(xs[hi] - xs[lo], 2.0 * span / xs.size());
        g(1 + 3 * p) = amp;
        g(2 + 3 * p) = xs[best];
        g(3 + 3 * p) = w;
        for (std::size_t k = 0; k < resid.size(); ++k) {
            const double u = 2.0 * (xs[k] - xs[best]) / w;
            resid[k] -= amp / (1.0 + u * u);
        }
    }
    return fit_lorentzian_sum(xs, ys, g);
}

FitResult fit_damped_sinusoid(const std::vector<double>& xs, const std::vector<double>& ys,
                              std::optional<Eigen::VectorXd> guess) {
    check_data(xs, ys, 5);
    const double range = data_range(ys);
    if (!(range > 0)) throw FitError("fit_damped_sinusoid: data are flat", ys);
    const double span = xs.back() - xs.front();
    const double m = mean(ys);

    std::vector<Eigen::VectorXd> starts;
    if (guess) {
        starts.push_back(*guess);
    } else {
        const double f = dominant_frequency(xs, ys);
        if (!(f > 0)) throw FitError("fit_damped_sinusoid: no oscillation found", ys);
        // Phase and amplitude by linear least squares at the periodogram frequency.
        Eigen::MatrixXd basis(static_cast<Eigen::Index>(xs.size()), 3);
        Eigen::VectorXd y(static_cast<Eigen::Index>(xs.size()));
        for (std::size_t k = 0; k < xs.size(); ++k) {
            basis(k, 0) = 1.0;
            basis(k, 1) = std::cos(two_pi * f * xs[k]);
            basis(k, 2) = std::sin(two_pi * f * xs[k]);
            y(k) = ys[k];
        }
        const Eigen::Vector3d c = basis.colPivHouseholderQr().solve(y);
        const double amp = std::hypot(c(1), c(2));
        const double phase = std::atan2(-c(2), c(1));
        for (double rate : {0.0, 1.0 / span, 3.0 / span}) {
            Eigen::VectorXd p(5);
            p << c(0), amp * std::exp(rate * xs.front()) * (1.0 + rate * span / 2), f, rate, phase;
            starts.push_back(p);
        }
    }

    std::optional<FitResult> best;
    for (const auto& p0 : starts) {
        Eigen::VectorXd sc(5);
        sc << std::max(std::abs(m), range), std::max(std::abs(p0(1)), range), std::abs(p0(2)),
            1.0 / span, 1.0;
        FitResult r = least_squares(damped_sinusoid, xs, ys, p0, sc);
        if (!best || r.residual_norm < best->residual_norm) best = std::move(r);
    }
    FitResult res = std::move(*best);
    res.model = FitModel::damped_sinusoid;
    res.names = {"offset", "amplitude", "frequency", "rate", "phase"};
    if (res.params(1) < 0) {
        res.params(1) = -res.params(1);
        res.params(4) += pi;
    }
    if (res.params(2) < 0) {
        res.params(2) = -res.params(2);
        res.params(4) = -res.params(4);
    }
    res.params(4) = std::remainder(res.params(4), two_pi);
    return res;
}

}  // namespace siv
