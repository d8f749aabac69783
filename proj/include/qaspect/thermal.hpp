#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "qaspect/constants.hpp"
#include "qaspect/errors.hpp"
#include "qaspect/spectrum.hpp"

namespace qaspect {

/// Bath temperature. Stored in millikelvin; as_ghz() converts through
/// k_B/h. Zero is accepted and means the exact zero-temperature limit.
struct Temperature {
  double millikelvin = 12.5;

  static Temperature from_mk(double mk) {
    if (!(mk >= 0.0) || !std::isfinite(mk))
      throw ValidationError("temperature must be finite and >= 0 mK");
    return Temperature{mk};
  }

  double as_ghz() const { return millikelvin * 1e-3 * k_boltzmann_ghz_per_kelvin; }
  bool is_zero() const { return millikelvin == 0.0; }
};

/// Equilibrium populations P_n = exp(-(E_n - E_1)/kT)/Z over the full
/// spectrum. At T = 0 the limit distribution is returned: equal weight on
/// the degenerate ground set, zero elsewhere.
inline Eigen::VectorXd boltzmann_populations(const Spectrum& spec, Temperature t) {
  Eigen::Index dim = spec.energies.size();
  if (dim == 0) throw ValidationError("boltzmann_populations: empty spectrum");
  Eigen::VectorXd p(dim);
  if (t.is_zero()) {
    constexpr double degeneracy_tol = 1e-12;
    Eigen::Index ground_count = 0;
    while (ground_count < dim &&
           spec.energies[ground_count] - spec.energies[0] <= degeneracy_tol)
      ++ground_count;
    p.setZero();
    p.head(ground_count).setConstant(1.0 / static_cast<double>(ground_count));
    return p;
  }
  double kt = t.as_ghz();
  for (Eigen::Index i = 0; i < dim; ++i) p[i] = std::exp(-(spec.energies[i] - spec.energies[0]) / kt);
  p /= p.sum();
  return p;
}

/// Hermitian, unit-trace, PSD operator in the computational basis.
struct DensityMatrix {
  Eigen::MatrixXcd matrix;

  Eigen::Index dim() const { return matrix.rows(); }
};

/// Tr rho^2.
inline double purity(const DensityMatrix& rho) {
  return (rho.matrix * rho.matrix).trace().real();
}

/// rho = sum_i P_i |psi_i><psi_i| over the leading eigenstates. With
/// `truncate` = k the first k populations are kept and renormalized (the
/// two-level reconstruction uses k = 2); without truncation the populations
/// must already sum to 1 within 1e-9.
inline DensityMatrix build_density_matrix(const Spectrum& spec, const Eigen::VectorXd& populations,
                                          std::optional<int> truncate = {}) {
  if (populations.size() > spec.dim())
    throw ValidationError("build_density_matrix: more populations than eigenstates");
  for (Eigen::Index i = 0; i < populations.size(); ++i)
    if (populations[i] < 0.0)
      throw ValidationError("build_density_matrix: negative population at level " +
                            std::to_string(i));
  Eigen::VectorXd p = populations;
  if (truncate) {
    if (*truncate < 1 || *truncate > p.size())
      throw ValidationError("build_density_matrix: truncation level out of range");
    p = p.head(*truncate).eval();
    double sum = p.sum();
    if (sum <= 0.0) throw ValidationError("build_density_matrix: truncated populations sum to 0");
    p /= sum;
  } else {
    double sum = p.sum();
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("build_density_matrix: populations sum to " + std::to_string(sum) +
                            ", expected 1 (pass truncate to renormalize)");
  }
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(spec.states.rows(), spec.states.rows());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] != 0.0) rho += p[i] * (spec.states.col(i) * spec.states.col(i).adjoint());
  return DensityMatrix{std::move(rho)};
}

}  // namespace qaspect
