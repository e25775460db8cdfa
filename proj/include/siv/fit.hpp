#pragma once

// Damped least-squares (Levenberg-Marquardt) curve fitting for the three
// line shapes the experiment runners need.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace siv {

enum class FitModel { exponential, lorentzian_sum, damped_sinusoid };

const char* to_string(FitModel m);

struct FitResult {
    FitModel model = FitModel::exponential;
    std::vector<std::string> names;
    Eigen::VectorXd params;
    Eigen::VectorXd sigma;       ///< 1-sigma uncertainties
    double residual_norm = 0.0;  ///< ||model - data||_2
    double rms = 0.0;
    double rel_residual = 0.0;   ///< rms / data range
    int iterations = 0;
    bool converged = false;

    double param(const std::string& name) const;
    double uncertainty(const std::string& name) const;
    double evaluate(double x) const;
    bool acceptable(double rel_threshold = 0.05) const { return converged && rel_residual <= rel_threshold; }
};

using ModelFunction = std::function<double(double x, const Eigen::VectorXd& p)>;

struct LeastSquaresOptions {
    int max_iterations = 2000;
    double step_tol = 1e-13;
};

/// Generic LM driver. `scale` gives a typical magnitude for each parameter.
FitResult least_squares(const ModelFunction& f, const std::vector<double>& xs,
                        const std::vector<double>& ys, Eigen::VectorXd p0,
                        const Eigen::VectorXd& scale, const LeastSquaresOptions& opt = {});

/// y = offset + amplitude * exp(-x / tau); params {offset, amplitude, tau}.
/// Throws FitError when the data show no significant decay.
FitResult fit_exponential(const std::vector<double>& xs, const std::vector<double>& ys,
                          std::optional<Eigen::VectorXd> guess = std::nullopt);

/// y = offset + sum_k amplitude_k / (1 + (2 (x - center_k) / fwhm_k)^2).
/// guess = {offset, a_0, c_0, w_0, a_1, c_1, w_1, ...}.
FitResult fit_lorentzian_sum(const std::vector<double>& xs, const std::vector<double>& ys,
                             const Eigen::VectorXd& guess);
/// Automatic initial guess by successive peak picking.
FitResult fit_lorentzian_sum(const std::vector<double>& xs, const std::vector<double>& ys,
                             int peaks);

/// y = offset + amplitude * exp(-rate x) cos(2 pi frequency x + phase);
/// params {offset, amplitude, frequency, rate, phase}. Without a guess the
/// frequency comes from the periodogram peak.
FitResult fit_damped_sinusoid(const std::vector<double>& xs, const std::vector<double>& ys,
                              std::optional<Eigen::VectorXd> guess = std::nullopt);

/// Periodogram peak frequency (cycles per x unit), parabolically refined.
double dominant_frequency(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace siv
