#pragma once

namespace faraday {

/// Fundamental constants in SI units (CODATA 2018).
struct PhysicalConstants {
    double hbar;  ///< reduced Planck constant, J s
    double c;     ///< speed of light in vacuum, m/s
    double mu0;   ///< vacuum permeability, N/A^2
    double eps0;  ///< vacuum permittivity, F/m
};

inline constexpr PhysicalConstants codata2018{
    1.054571817e-34,
    299792458.0,
    1.25663706212e-6,
    8.8541878128e-12,
};

inline constexpr double kHbar = codata2018.hbar;
inline constexpr double kSpeedOfLight = codata2018.c;
inline constexpr double kMu0 = codata2018.mu0;
inline constexpr double kEps0 = codata2018.eps0;

// Unit conversion factors to internal SI.
inline constexpr double kElectronVolt = 1.602176634e-19;       // J per eV
inline constexpr double kDebye = 3.33564095e-30;               // C m per debye
inline constexpr double kBohrMagneton = 9.2740100783e-24;      // J/T per mu_B

}  // namespace faraday
