#pragma once

// Core typedefs, physical constants and error types shared across the library.
// Everything internal is in Hartree atomic units with hbar = 1.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcldyn {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

namespace units {
// 1 fs in atomic time units.
inline constexpr double fs = 41.341374575751;
// 1 cm^-1 in hartree.
inline constexpr double wavenumber = 4.556335252912e-6;
// Boltzmann constant in hartree/kelvin.
inline constexpr double k_boltzmann = 3.166811563e-6;
}  // namespace units

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Near-degenerate adiabatic eigenvalues: the coupling formula d = <a|dh|b>/(Eb-Ea)
// is singular and the caller must back off (retry with a smaller step).
struct DegenerateEigenvalues : Error {
    using Error::Error;
};

// A trajectory produced a non-finite coordinate.
struct StepDiverged : Error {
    using Error::Error;
};

// Ohmic discretization left its log domain (omega_max too close to the divergent limit).
struct NonPositiveFrequency : Error {
    using Error::Error;
};

// Wavepacket density reached the grid boundary above tolerance.
struct GridTooSmall : Error {
    using Error::Error;
};

struct EmptyEnsemble : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace qcldyn
