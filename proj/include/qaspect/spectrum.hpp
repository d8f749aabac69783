#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "qaspect/errors.hpp"
#include "qaspect/hamiltonian.hpp"
#include "qaspect/parallel.hpp"

namespace qaspect {

/// Full eigensystem of a Hermitian operator: ascending energies in GHz and
/// the matching orthonormal eigenvector columns.
struct Spectrum {
  Eigen::VectorXd energies;
  Eigen::MatrixXcd states;

  Eigen::Index dim() const { return energies.size(); }
  /// Ground-state expectation of sigma^z on qubit q (n-qubit register).
  double ground_sz(int q, int n) const { return state_sz(0, q, n); }
  double state_sz(Eigen::Index level, int q, int n) const {
    double v = 0.0;
    for (Eigen::Index x = 0; x < states.rows(); ++x)
      v += std::norm(states(x, level)) * spin_z(static_cast<std::size_t>(x), q, n);
    return v;
  }
};

/// Dense Hermitian eigendecomposition with a deterministic phase convention:
/// each eigenvector is rotated so its largest-magnitude component is real and
/// positive. Inside degenerate subspaces the basis is whatever the solver
/// returns (orthonormalized); downstream code must not rely on that choice.
inline Spectrum eigendecompose(const Eigen::MatrixXcd& h) {
  if (h.rows() != h.cols()) throw ValidationError("eigendecompose: matrix not square");
  if (hermiticity_error(h) > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()))
    throw ValidationError("eigendecompose: matrix is not Hermitian");
  Spectrum spec;
  if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
    // Exactly real symmetric input takes the much faster real solver.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.real());
    if (solver.info() != Eigen::Success)
      throw NumericalError("eigendecompose: solver failed to converge");
    spec.energies = solver.eigenvalues();
    spec.states = solver.eigenvectors().cast<Complex>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success)
      throw NumericalError("eigendecompose: solver failed to converge");
    spec.energies = solver.eigenvalues();
    spec.states = solver.eigenvectors();
  }
  for (Eigen::Index k = 0; k < spec.states.cols(); ++k) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < spec.states.rows(); ++i) {
      double m = std::abs(spec.states(i, k));
      if (m > best) {
        best = m;
        imax = i;
      }
    }
    Complex pivot = spec.states(imax, k);
    if (std::abs(pivot) > 0.0) spec.states.col(k) *= std::conj(pivot) / std::abs(pivot);
  }
  return spec;
}

/// Eigenvalues of a Hermitian matrix, ascending, with the same fast path for
/// exactly-real input as eigendecompose.
inline Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& h) {
  if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.real(), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

/// Gap g = E_2 - E_1 between ground and first excited state.
inline double extract_gap(const Spectrum& spec) {
  if (spec.energies.size() < 2) throw ValidationError("extract_gap: need at least two levels");
  return std::max(0.0, spec.energies[1] - spec.energies[0]);
}

/// Spectrum scan along the annealing parameter or a uniform diagnostic bias.
/// `levels` holds E_n - E_1 per grid point (row per point, column per level,
/// column 0 identically zero).
struct SpectrumScan {
  char axis = 's';  // 's' or 'h'
  std::vector<double> grid;
  Eigen::MatrixXd levels;
  std::vector<double> gap;
  /// s-scans: whether g decreases strictly along the grid.
  bool gap_monotone_decreasing = false;
  /// h-scans: minimum gap and its grid location.
  double min_gap = std::numeric_limits<double>::quiet_NaN();
  double min_gap_at = std::numeric_limits<double>::quiet_NaN();
  /// h-scans: ground-state <sigma^z_i> per grid point (row) and qubit (col).
  Eigen::MatrixXd polarization;
};

namespace detail {

inline void fill_scan_row(SpectrumScan& scan, std::size_t row, const Spectrum& spec, int n,
                          bool with_polarization) {
  auto r = static_cast<Eigen::Index>(row);
  for (Eigen::Index c = 0; c < spec.energies.size(); ++c)
    scan.levels(r, c) = spec.energies[c] - spec.energies[0];
  scan.gap[row] = extract_gap(spec);
  if (with_polarization)
    for (int q = 0; q < n; ++q) scan.polarization(r, q) = spec.ground_sz(q, n);
}

}  // namespace detail

inline SpectrumScan scan_vs_s(const ProblemInstance& inst, const AnnealSchedule& schedule,
                              const std::vector<double>& s_grid) {
  if (s_grid.empty()) throw ValidationError("scan_vs_s: empty grid");
  SpectrumScan scan;
  scan.axis = 's';
  scan.grid = s_grid;
  std::size_t dim = std::size_t{1} << inst.n();
  scan.levels.resize(static_cast<Eigen::Index>(s_grid.size()), static_cast<Eigen::Index>(dim));
  scan.gap.resize(s_grid.size());
  parallel_for(s_grid.size(), [&](std::size_t k) {
    Spectrum spec = eigendecompose(assemble_hamiltonian(inst, schedule, s_grid[k]));
    detail::fill_scan_row(scan, k, spec, inst.n(), false);
  });
  scan.gap_monotone_decreasing = true;
  for (std::size_t k = 1; k < scan.gap.size(); ++k)
    if (!(scan.gap[k] < scan.gap[k - 1])) scan.gap_monotone_decreasing = false;
  return scan;
}

inline SpectrumScan scan_vs_h(const ProblemInstance& inst, const AnnealSchedule& schedule,
                              double s, const std::vector<double>& h_grid) {
  if (h_grid.empty()) throw ValidationError("scan_vs_h: empty grid");
  SpectrumScan scan;
  scan.axis = 'h';
  scan.grid = h_grid;
  std::size_t dim = std::size_t{1} << inst.n();
  scan.levels.resize(static_cast<Eigen::Index>(h_grid.size()), static_cast<Eigen::Index>(dim));
  scan.gap.resize(h_grid.size());
  scan.polarization.resize(static_cast<Eigen::Index>(h_grid.size()), inst.n());
  parallel_for(h_grid.size(), [&](std::size_t k) {
    AssembleOptions opt;
    opt.h_override = h_grid[k];
    Spectrum spec = eigendecompose(assemble_hamiltonian(inst, schedule, s, opt));
    detail::fill_scan_row(scan, k, spec, inst.n(), true);
  });
  std::size_t kmin = 0;
  for (std::size_t k = 1; k < scan.gap.size(); ++k)
    if (scan.gap[k] < scan.gap[kmin]) kmin = k;
  scan.min_gap = scan.gap[kmin];
  scan.min_gap_at = scan.grid[kmin];
  return scan;
}

}  // namespace qaspect
