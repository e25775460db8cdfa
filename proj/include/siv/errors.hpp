#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace siv {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Numerical failure (integration, steady state, fitting).
class NumericalError : public Error {
public:
    using Error::Error;
};

class DegenerateSteadyState : public NumericalError {
public:
    DegenerateSteadyState(const std::string& what, int kernel_dim)
        : NumericalError(what), kernel_dimension(kernel_dim) {}
    int kernel_dimension;
};

class FitError : public NumericalError {
public:
    FitError(const std::string& what, std::vector<double> residuals = {})
        : NumericalError(what), residuals(std::move(residuals)) {}
    std::vector<double> residuals;
};

/// Configuration errors carry every violation found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : Error(join(violations)), violations(std::move(violations)) {}
    std::vector<std::string> violations;

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += '\n';
            out += s;
        }
        return out;
    }
};

}  // namespace siv
