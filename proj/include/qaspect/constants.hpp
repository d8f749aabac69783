#pragma once

#include <complex>

namespace qaspect {

#define QASPECT_VERSION "0.1.0"

using Complex = std::complex<double>;

/// k_B/h in GHz per kelvin. Single source of truth for every
/// temperature <-> frequency conversion in the library.
inline constexpr double k_boltzmann_ghz_per_kelvin = 20.8366;

/// Largest supported register size for the dense representation.
inline constexpr int max_qubits = 12;

}  // namespace qaspect
