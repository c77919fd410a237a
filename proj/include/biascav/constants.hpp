#pragma once

#include <numbers>

namespace biascav::constants {

inline constexpr double pi = std::numbers::pi;

inline constexpr double speed_of_light = 299'792'458.0;          // m/s
inline constexpr double mu0 = 4.0e-7 * pi;                        // H/m
inline constexpr double eps0 = 1.0 / (mu0 * speed_of_light * speed_of_light);
inline constexpr double free_space_impedance = mu0 * speed_of_light;  // ohm

inline constexpr double planck = 6.626'070'15e-34;                // J s
inline constexpr double hbar = planck / (2.0 * pi);
inline constexpr double boltzmann = 1.380'649e-23;                // J/K
inline constexpr double bohr_magneton = 9.274'010'0783e-24;       // J/T

inline constexpr double gauss = 1.0e-4;                           // T
inline constexpr double volt_per_cm = 100.0;                      // V/m

}  // namespace biascav::constants
