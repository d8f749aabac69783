#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qaspect/bipartition.hpp"
#include "qaspect/errors.hpp"
#include "qaspect/instance.hpp"
#include "qaspect/parallel.hpp"
#include "qaspect/schedule.hpp"
#include "qaspect/spectrum.hpp"
#include "qaspect/states.hpp"
#include "qaspect/thermal.hpp"

namespace qaspect {

/// Partial transpose over subsystem A: the A-subsystem row/column indices
/// are swapped. An involution; preserves Hermiticity and trace.
inline Eigen::MatrixXcd partial_transpose(const Eigen::MatrixXcd& rho, const Bipartition& part) {
  std::size_t dim = std::size_t{1} << part.n();
  if (rho.rows() != static_cast<Eigen::Index>(dim) || rho.cols() != rho.rows())
    throw ValidationError("partial_transpose: dimension does not match cut");
  std::size_t ma = part.state_mask_a();
  Eigen::MatrixXcd out(rho.rows(), rho.cols());
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      std::size_t rt = (r & ~ma) | (c & ma);
      std::size_t ct = (c & ~ma) | (r & ma);
      out(static_cast<Eigen::Index>(rt), static_cast<Eigen::Index>(ct)) =
          rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

/// Negativity N_{A,B} = sum of |negative eigenvalues| of rho^{T_A}
/// (equivalently (||rho^{T_A}||_1 - 1)/2); 0.5 for Bell and GHZ states.
inline double negativity(const Eigen::MatrixXcd& rho, const Bipartition& part) {
  Eigen::VectorXd lambda = hermitian_eigenvalues(partial_transpose(rho, part));
  double neg = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) neg += std::max(0.0, -lambda[i]);
  return neg;
}

/// Negativity of a low-rank mixture rho = sum_k w_k |psi_k><psi_k| without
/// forming the full partial transpose: PT(rho) is supported on the span of
/// the Schmidt pair products a_j^* (x) b_i of the mixture's states, so its
/// nonzero eigenvalues equal those of the projection onto that span.
inline double negativity_low_rank(const Eigen::MatrixXcd& state_cols,
                                  const Eigen::VectorXd& weights, const Bipartition& part) {
  std::size_t dim = std::size_t{1} << part.n();
  if (state_cols.rows() != static_cast<Eigen::Index>(dim))
    throw ValidationError("negativity_low_rank: dimension does not match cut");
  if (weights.size() != state_cols.cols())
    throw ValidationError("negativity_low_rank: weight count does not match states");
  const double schmidt_cut = 1e-9;

  std::vector<SchmidtDecomposition> schmidts;
  schmidts.reserve(static_cast<std::size_t>(state_cols.cols()));
  Eigen::Index span_size = 0;
  for (Eigen::Index k = 0; k < state_cols.cols(); ++k) {
    schmidts.push_back(schmidt_decompose(state_cols.col(k), part));
    Eigen::Index r = 0;
    while (r < schmidts.back().values.size() && schmidts.back().values[r] > schmidt_cut) ++r;
    span_size += r * r;
  }
  // The compression only wins while the pair-product span is small against
  // the full dimension; otherwise the dense spectrum is cheaper.
  if (span_size * 2 >= static_cast<Eigen::Index>(dim)) {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(state_cols.rows(), state_cols.rows());
    for (Eigen::Index k = 0; k < state_cols.cols(); ++k)
      rho += weights[k] * (state_cols.col(k) * state_cols.col(k).adjoint());
    return negativity(rho, part);
  }

  std::vector<Eigen::VectorXcd> span;
  for (const auto& sd : schmidts) {
    for (Eigen::Index i = 0; i < sd.values.size(); ++i) {
      if (sd.values[i] <= schmidt_cut) break;
      for (Eigen::Index j = 0; j < sd.values.size(); ++j) {
        if (sd.values[j] <= schmidt_cut) break;
        span.push_back(embed_product(sd.a_states.col(j).conjugate(), sd.b_states.col(i), part));
      }
    }
  }
  // Orthonormal basis of the support.
  Eigen::MatrixXcd basis(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(span.size()));
  Eigen::Index cols = 0;
  for (auto& v : span) {
    for (int pass = 0; pass < 2; ++pass)
      if (cols > 0) v -= basis.leftCols(cols) * (basis.leftCols(cols).adjoint() * v).eval();
    double norm = v.norm();
    if (norm > 1e-10) basis.col(cols++) = v / norm;
  }
  if (cols == 0) return 0.0;
  auto b = basis.leftCols(cols);
  // Projected PT(rho): sum over states of w * sum_ij s_i s_j (B^+ u_ji)(B^+ u_ij)^+
  Eigen::MatrixXcd small = Eigen::MatrixXcd::Zero(cols, cols);
  for (Eigen::Index k = 0; k < state_cols.cols(); ++k) {
    const auto& sd = schmidts[static_cast<std::size_t>(k)];
    Eigen::Index r = 0;
    while (r < sd.values.size() && sd.values[r] > schmidt_cut) ++r;
    if (r == 0) continue;
    Eigen::MatrixXcd proj(cols, r * r);  // column (i*r+j) holds B^+ (a_j^* (x) b_i)
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < r; ++j)
        proj.col(i * r + j) =
            b.adjoint() * embed_product(sd.a_states.col(j).conjugate(), sd.b_states.col(i), part);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < r; ++j)
        small += (weights[k] * sd.values[i] * sd.values[j]) * proj.col(i * r + j) *
                 proj.col(j * r + i).adjoint();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (small + small.adjoint()),
                                                         Eigen::EigenvaluesOnly);
  double neg = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    neg += std::max(0.0, -solver.eigenvalues()[i]);
  return neg;
}

/// Geometric mean of N_{A,B} over all bipartitions; zero as soon as any
/// cut is PPT. Nonzero value reports global entanglement.
inline double global_negativity(const Eigen::MatrixXcd& rho, int n) {
  auto parts = enumerate_bipartitions(n);
  std::vector<double> values(parts.size());
  parallel_for(parts.size(), [&](std::size_t k) { values[k] = negativity(rho, parts[k]); });
  double log_sum = 0.0;
  for (double v : values) {
    if (v <= 0.0) return 0.0;
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

/// Low-rank variant of global_negativity for rho given in eigenmixture form.
inline double global_negativity_low_rank(const Eigen::MatrixXcd& state_cols,
                                         const Eigen::VectorXd& weights, int n) {
  auto parts = enumerate_bipartitions(n);
  std::vector<double> values(parts.size());
  parallel_for(parts.size(),
               [&](std::size_t k) { values[k] = negativity_low_rank(state_cols, weights, parts[k]); });
  double log_sum = 0.0;
  for (double v : values) {
    if (v <= 0.0) return 0.0;
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

/// Wootters concurrence of a two-qubit density matrix:
/// C = max(0, l1 - l2 - l3 - l4) with l_i the descending square roots of the
/// eigenvalues of rho * (sy (x) sy) rho^* (sy (x) sy), conjugation taken in
/// the computational basis. Evaluated through the Hermitian form
/// sqrt(rho) rho_tilde sqrt(rho).
inline double concurrence(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != 4 || rho.cols() != 4)
    throw ValidationError("concurrence is defined for two qubits (dim 4)");
  Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
  // sigma_y (x) sigma_y has entries (-1)^parity on the anti-diagonal.
  yy(0, 3) = -1.0;
  yy(1, 2) = 1.0;
  yy(2, 1) = 1.0;
  yy(3, 0) = -1.0;
  Eigen::Matrix4cd rho_tilde = yy * rho.conjugate() * yy;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> rho_eig(rho);
  Eigen::Vector4d d = rho_eig.eigenvalues().cwiseMax(0.0);
  Eigen::Matrix4cd sqrt_rho =
      rho_eig.eigenvectors() * d.cwiseSqrt().asDiagonal() * rho_eig.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(sqrt_rho * rho_tilde * sqrt_rho);
  Eigen::Vector4d lambda = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  // Ascending order: top eigenvalue minus the rest.
  return std::max(0.0, lambda[3] - lambda[2] - lambda[1] - lambda[0]);
}

/// Pure-state concurrence 2|wz - xy| for amplitudes (w, x, y, z).
inline double concurrence_pure(const Eigen::VectorXcd& psi) {
  if (psi.size() != 4) throw ValidationError("concurrence_pure needs a two-qubit state");
  return 2.0 * std::abs(psi(0) * psi(3) - psi(1) * psi(2));
}

/// Entanglement of formation E_f = h2((1 + sqrt(1 - C^2))/2) in bits.
inline double entanglement_of_formation(double c) {
  if (!std::isfinite(c)) throw ValidationError("entanglement_of_formation: non-finite concurrence");
  if (c < 0.0 || c > 1.0) {
    if (c > 1.0 && c < 1.0 + 1e-12)
      c = 1.0;  // numerical overshoot
    else
      throw ValidationError("entanglement_of_formation: concurrence outside [0,1]");
  }
  double x = 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c)));
  auto h2 = [](double p) {
    double q = 1.0 - p;
    double v = 0.0;
    if (p > 0.0) v -= p * std::log2(p);
    if (q > 0.0) v -= q * std::log2(q);
    return v;
  };
  return h2(x);
}

/// One row of an entanglement-measure sweep. NaN marks measures that do not
/// apply (concurrence for n != 2).
struct MeasurePoint {
  double s = 0.0;
  double concurrence = 0.0;
  double concurrence_err = 0.0;
  double negativity = 0.0;
  double negativity_err = 0.0;
  double formation = 0.0;
};

struct MeasureSeries {
  std::vector<MeasurePoint> points;
};

struct MeasureOptions {
  /// Levels kept in the thermal density matrix (renormalized); the
  /// reconstruction from measured P1, P2 corresponds to 2.
  int levels = 2;
  /// Monte-Carlo resamples for the uncertainty band; 0 disables the band.
  int mc_samples = 1000;
  std::uint64_t seed = 2024;
  /// Fractional 1-sigma spreads applied to delta and escale when resampling.
  double delta_fraction = 0.08;
  double escale_fraction = 0.05;
};

namespace detail {

struct MeasureSample {
  double c = std::numeric_limits<double>::quiet_NaN();
  double neg = 0.0;
};

inline MeasureSample evaluate_measures(const ProblemInstance& inst, double delta, double escale,
                                       Temperature t, int levels) {
  Spectrum spec = eigendecompose(assemble_from_energies(inst, delta, escale));
  Eigen::VectorXd populations = boltzmann_populations(spec, t);
  int keep = std::min<int>(levels, static_cast<int>(populations.size()));
  Eigen::VectorXd kept = populations.head(keep);
  kept /= kept.sum();
  MeasureSample out;
  if (inst.n() == 2) {
    DensityMatrix rho = build_density_matrix(spec, populations, keep);
    out.c = concurrence(rho.matrix);
    out.neg = negativity(rho.matrix, Bipartition(1u, 2));
  } else {
    out.neg = global_negativity_low_rank(spec.states.leftCols(keep), kept, inst.n());
  }
  return out;
}

inline double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

/// Thermal-state entanglement measures along an s-grid, with uncertainty
/// bands from Monte-Carlo resampling of the two energy scales within their
/// fractional calibration spreads. Deterministic for a fixed seed.
inline MeasureSeries measure_series(const ProblemInstance& inst, const AnnealSchedule& schedule,
                                    Temperature t, const std::vector<double>& s_grid,
                                    const MeasureOptions& opt = {}) {
  if (s_grid.empty()) throw ValidationError("measure_series: empty grid");
  if (opt.levels < 1) throw ValidationError("measure_series: levels must be >= 1");
  MeasureSeries series;
  series.points.resize(s_grid.size());
  parallel_for(s_grid.size(), [&](std::size_t k) {
    double s = s_grid[k];
    double delta = schedule.delta(s);
    double escale = schedule.escale(s);
    auto nominal = detail::evaluate_measures(inst, delta, escale, t, opt.levels);
    MeasurePoint pt;
    pt.s = s;
    pt.concurrence = nominal.c;
    pt.negativity = nominal.neg;
    pt.formation = inst.n() == 2 ? entanglement_of_formation(std::clamp(nominal.c, 0.0, 1.0))
                                 : std::numeric_limits<double>::quiet_NaN();
    if (opt.mc_samples > 0) {
      std::mt19937_64 rng(opt.seed + 0x9e3779b97f4a7c15ull * (k + 1));
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::vector<double> cs, ns;
      cs.reserve(static_cast<std::size_t>(opt.mc_samples));
      ns.reserve(static_cast<std::size_t>(opt.mc_samples));
      for (int m = 0; m < opt.mc_samples; ++m) {
        double dd = delta * (1.0 + opt.delta_fraction * gauss(rng));
        double ee = escale * (1.0 + opt.escale_fraction * gauss(rng));
        auto sample =
            detail::evaluate_measures(inst, std::max(dd, 0.0), std::max(ee, 0.0), t, opt.levels);
        if (inst.n() == 2) cs.push_back(sample.c);
        ns.push_back(sample.neg);
      }
      pt.concurrence_err = detail::sample_stddev(cs);
      pt.negativity_err = detail::sample_stddev(ns);
    }
    series.points[k] = pt;
  });
  return series;
}

}  // namespace qaspect
