#pragma once

// CODATA 2018 values, SI units.
namespace cpwres::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double h = 6.62607015e-34;        // J s (exact)
inline constexpr double hbar = 1.054571817e-34;    // J s
inline constexpr double k_B = 1.380649e-23;        // J/K (exact)
inline constexpr double epsilon0 = 8.8541878128e-12;  // F/m
inline constexpr double mu0 = 1.25663706212e-6;    // H/m
inline constexpr double c = 299792458.0;           // m/s (exact)

inline constexpr double euler_gamma = 0.5772156649015329;
inline constexpr double zeta3 = 1.2020569031595943;

// Weak-coupling BCS ratio Delta_0 / (k_B T_c).
inline constexpr double bcs_gap_ratio = 1.76;

}  // namespace cpwres::constants
