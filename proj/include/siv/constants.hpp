#pragma once

#include <numbers>

namespace siv {

/// CODATA 2018 values in SI units.
struct PhysicalConstants {
    static constexpr double hbar = 1.054571817e-34;   // J s
    static constexpr double h = 6.62607015e-34;       // J s
    static constexpr double k_B = 1.380649e-23;       // J/K
    static constexpr double c = 299792458.0;          // m/s
    static constexpr double eps0 = 8.8541878128e-12;  // F/m
    static constexpr double mu_B = 9.2740100783e-24;  // J/T
    static constexpr double debye = 3.33564e-30;      // C m
};

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Hz -> rad/s
constexpr double angular(double hz) { return two_pi * hz; }
/// rad/s -> Hz
constexpr double hertz(double rad_per_s) { return rad_per_s / two_pi; }

}  // namespace siv
