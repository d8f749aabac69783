#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qaspect/constants.hpp"
#include "qaspect/errors.hpp"
#include "qaspect/instance.hpp"
#include "qaspect/schedule.hpp"

namespace qaspect {

/// Dense Hermitian operator in the computational (sigma^z product) basis,
/// entries in GHz. Basis convention, frozen across the library:
///   - qubit 0 is the most significant bit of the basis index;
///   - bit value 0 means spin up (sigma^z = +1), bit 1 means spin down.
using HermitianOperator = Eigen::MatrixXcd;

/// sigma^z eigenvalue of qubit `q` in basis state `index` of an n-qubit register.
inline int spin_z(std::size_t index, int q, int n) {
  return ((index >> (n - 1 - q)) & 1u) ? -1 : +1;
}

/// max |H - H^dagger| over entries.
inline double hermiticity_error(const Eigen::MatrixXcd& h) {
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

/// Classical problem energy -sum_i h_i s_i + sum_{i<j} J_ij s_i s_j of one
/// spin configuration (dimensionless).
inline double problem_energy(const ProblemInstance& inst, std::size_t index,
                             const std::optional<double>& h_override = {}) {
  int n = inst.n();
  double e = 0.0;
  for (int q = 0; q < n; ++q) {
    double bias = h_override ? *h_override : inst.h()[static_cast<std::size_t>(q)];
    e -= bias * spin_z(index, q, n);
  }
  for (const auto& c : inst.couplings())
    e += c.value * spin_z(index, c.i, n) * spin_z(index, c.j, n);
  return e;
}

struct AssembleOptions {
  /// Replaces every bias h_i with a single uniform value (diagnostic sweeps).
  std::optional<double> h_override;
  /// Optional per-qubit multipliers on the transverse term (perturbation
  /// studies); empty means a common delta on all qubits.
  std::vector<double> delta_scale;
};

/// Assembles escale * H_P - (delta/2) * sum_i sigma^x_i as a dense matrix,
/// with energies given directly in GHz.
inline HermitianOperator assemble_from_energies(const ProblemInstance& inst, double delta_ghz,
                                                double escale_ghz,
                                                const AssembleOptions& opt = {}) {
  int n = inst.n();
  if (!std::isfinite(delta_ghz) || !std::isfinite(escale_ghz))
    throw ValidationError("non-finite energy scale");
  if (!opt.delta_scale.empty() && static_cast<int>(opt.delta_scale.size()) != n)
    throw ValidationError("delta_scale length does not match qubit count");
  std::size_t dim = std::size_t{1} << n;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
  for (std::size_t x = 0; x < dim; ++x) {
    auto xi = static_cast<Eigen::Index>(x);
    h(xi, xi) = escale_ghz * problem_energy(inst, x, opt.h_override);
    for (int q = 0; q < n; ++q) {
      double scale = opt.delta_scale.empty() ? 1.0 : opt.delta_scale[static_cast<std::size_t>(q)];
      std::size_t flipped = x ^ (std::size_t{1} << (n - 1 - q));
      h(static_cast<Eigen::Index>(flipped), xi) += -0.5 * delta_ghz * scale;
    }
  }
  return h;
}

/// Assembles the system Hamiltonian at annealing point s using the
/// schedule's delta(s) and escale(s).
inline HermitianOperator assemble_hamiltonian(const ProblemInstance& inst,
                                              const AnnealSchedule& schedule, double s,
                                              const AssembleOptions& opt = {}) {
  return assemble_from_energies(inst, schedule.delta(s), schedule.escale(s), opt);
}

/// Probe-qubit configuration for tunneling spectroscopy. All energies GHz.
struct ProbeConfig {
  /// Probe tunneling amplitude Delta_P; must be small against both the
  /// system delta and |jp_ghz| (checked with scale_ratio).
  double delta_p_ghz = 1e-3;
  /// Probe coupling energy (escale * J_P). Negative polarizes the attached
  /// qubit down in the probe's "left" manifold.
  double jp_ghz = -1.0;
  /// Qubit the probe couples to.
  int attach_to = 0;
  /// Spectral broadening width of the probe (Gaussian sigma or Lorentzian HWHM).
  double linewidth_ghz = 0.4;
  /// Probe bias sweep; when empty, callers choose an automatic window.
  std::vector<double> eps_p_grid;
  /// Enforced ratio for delta_p << min(delta, |jp|).
  double scale_ratio = 100.0;

  void validate(int n, double system_delta_ghz) const {
    if (attach_to < 0 || attach_to >= n) throw ValidationError("probe attach_to out of range");
    if (!(linewidth_ghz > 0.0)) throw ValidationError("probe linewidth must be > 0");
    if (delta_p_ghz < 0.0) throw ValidationError("probe delta_p must be >= 0");
    double ceiling = std::min(system_delta_ghz, std::abs(jp_ghz));
    if (delta_p_ghz * scale_ratio > ceiling)
      throw ValidationError("probe constraint delta_p << min(delta, |jp|) violated: delta_p=" +
                            std::to_string(delta_p_ghz) + " GHz vs min=" +
                            std::to_string(ceiling) + " GHz (ratio " +
                            std::to_string(scale_ratio) + ")");
  }
};

/// Assembles the composite system+probe operator
///   H = H_S - [jp * sigma^z_attach - eps_p/2] (1 - sigma^z_P) - (delta_p/2) sigma^x_P
/// on 2^(n+1) states. The probe occupies the least significant bit; the
/// compensating bias on the attached qubit is built into the (1 - sigma^z_P)
/// form, so the probe-up block reproduces H_S exactly.
inline HermitianOperator assemble_probe_hamiltonian(const ProblemInstance& inst,
                                                    const AnnealSchedule& schedule, double s,
                                                    const ProbeConfig& probe, double eps_p_ghz,
                                                    const AssembleOptions& opt = {}) {
  if (!std::isfinite(eps_p_ghz)) throw ValidationError("probe bias eps_p must be finite");
  double delta = schedule.delta(s);
  probe.validate(inst.n(), delta);
  HermitianOperator hs = assemble_hamiltonian(inst, schedule, s, opt);
  int n = inst.n();
  std::size_t sys_dim = std::size_t{1} << n;
  std::size_t dim = sys_dim << 1;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
  for (std::size_t x = 0; x < sys_dim; ++x) {
    for (std::size_t y = 0; y < sys_dim; ++y) {
      Complex v = hs(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
      if (v != Complex{0.0, 0.0}) {
        h(static_cast<Eigen::Index>(2 * y), static_cast<Eigen::Index>(2 * x)) += v;
        h(static_cast<Eigen::Index>(2 * y + 1), static_cast<Eigen::Index>(2 * x + 1)) += v;
      }
    }
    // Probe-down manifold: -2*jp*sigma^z_attach + eps_p on the diagonal.
    auto down = static_cast<Eigen::Index>(2 * x + 1);
    h(down, down) += -2.0 * probe.jp_ghz * spin_z(x, probe.attach_to, n) + eps_p_ghz;
  }
  // Probe tunneling connects the manifolds.
  for (std::size_t x = 0; x < sys_dim; ++x) {
    auto up = static_cast<Eigen::Index>(2 * x);
    h(up + 1, up) += -0.5 * probe.delta_p_ghz;
    h(up, up + 1) += -0.5 * probe.delta_p_ghz;
  }
  return h;
}

}  // namespace qaspect
