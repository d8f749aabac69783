#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qaspect/bipartition.hpp"
#include "qaspect/entangle.hpp"
#include "qaspect/errors.hpp"
#include "qaspect/hamiltonian.hpp"
#include "qaspect/instance.hpp"
#include "qaspect/parallel.hpp"
#include "qaspect/schedule.hpp"
#include "qaspect/sdp.hpp"
#include "qaspect/spectrum.hpp"
#include "qaspect/states.hpp"
#include "qaspect/thermal.hpp"

namespace qaspect {

/// Cross-susceptibilities chi_ij = d<sigma^z_i>/d(htilde_j) in 1/GHz, where
/// htilde_j = escale * h_j is the bias energy applied to qubit j alone.
/// Evaluated at the h = 0 degeneracy point by central finite differences.
struct SusceptibilityMatrix {
  Eigen::MatrixXd chi;
  double s = 0.0;
  double escale_ghz = 0.0;
  double step = 0.0;
  /// Largest relative change of any entry when the step is halved.
  double richardson_error = 0.0;
};

struct SusceptibilityOptions {
  /// Finite-difference step in dimensionless h units.
  double step = 1e-3;
  /// Halve the step and report the relative change.
  bool richardson_check = true;
  /// Ground state below this gap counts as degenerate and is rejected.
  double degeneracy_floor_ghz = 1e-6;
};

namespace witness_detail {

/// <sigma^z_i> for all qubits in the thermal (or T = 0 ground) state.
inline Eigen::VectorXd sz_expectations(const ProblemInstance& inst, double delta, double escale,
                                       const std::optional<Temperature>& t) {
  Spectrum spec = eigendecompose(assemble_from_energies(inst, delta, escale));
  int n = inst.n();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  if (!t || t->is_zero()) {
    for (int q = 0; q < n; ++q) out[q] = spec.ground_sz(q, n);
    return out;
  }
  Eigen::VectorXd p = boltzmann_populations(spec, *t);
  for (Eigen::Index lvl = 0; lvl < spec.dim(); ++lvl) {
    if (p[lvl] < 1e-300) continue;
    for (int q = 0; q < n; ++q) out[q] += p[lvl] * spec.state_sz(lvl, q, n);
  }
  return out;
}

inline Eigen::MatrixXd chi_at_step(const ProblemInstance& inst, double delta, double escale,
                                   const std::optional<Temperature>& t, double step) {
  int n = inst.n();
  Eigen::MatrixXd chi(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    auto jq = static_cast<int>(j);
    Eigen::VectorXd plus = sz_expectations(inst.with_bias(jq, step), delta, escale, t);
    Eigen::VectorXd minus = sz_expectations(inst.with_bias(jq, -step), delta, escale, t);
    chi.col(jq) = (plus - minus) / (2.0 * step * escale);
  });
  return chi;
}

}  // namespace witness_detail

/// T absent or zero selects the pure ground-state susceptibility.
inline SusceptibilityMatrix cross_susceptibility(const ProblemInstance& inst,
                                                 const AnnealSchedule& schedule, double s,
                                                 const std::optional<Temperature>& t = {},
                                                 const SusceptibilityOptions& opt = {}) {
  if (!(opt.step > 0.0)) throw ValidationError("cross_susceptibility: step must be > 0");
  for (double h : inst.h())
    if (h != 0.0)
      throw ValidationError("cross_susceptibility: instance must sit at the h = 0 degeneracy point");
  double delta = schedule.delta(s);
  double escale = schedule.escale(s);
  Spectrum base = eigendecompose(assemble_from_energies(inst, delta, escale));
  if (extract_gap(base) < opt.degeneracy_floor_ghz)
    throw ValidationError("cross_susceptibility: ground state is degenerate (gap < " +
                          std::to_string(opt.degeneracy_floor_ghz) +
                          " GHz); the witness requires a non-degenerate ground state");

  SusceptibilityMatrix out;
  out.s = s;
  out.escale_ghz = escale;
  out.step = opt.step;
  out.chi = witness_detail::chi_at_step(inst, delta, escale, t, opt.step);
  if (opt.richardson_check) {
    Eigen::MatrixXd fine = witness_detail::chi_at_step(inst, delta, escale, t, 0.5 * opt.step);
    double scale = std::max(1e-300, out.chi.cwiseAbs().maxCoeff());
    out.richardson_error = (fine - out.chi).cwiseAbs().maxCoeff() / scale;
  }
  return out;
}

/// R_AB = |sum_{i in A, j in B} Jtilde_ij chi_ij| / (4 N_AB), with
/// Jtilde_ij = escale * J_ij and N_AB the number of couplings crossing the
/// cut. Each physical coupling enters the double sum exactly once.
inline double witness_R(const SusceptibilityMatrix& chi, const ProblemInstance& inst,
                        const AnnealSchedule& schedule, double s, const Bipartition& part) {
  if (part.n() != inst.n()) throw ValidationError("witness_R: cut size does not match instance");
  double escale = schedule.escale(s);
  double sum = 0.0;
  int crossing = 0;
  for (const auto& c : inst.couplings()) {
    if (c.value == 0.0 || part.in_a(c.i) == part.in_a(c.j)) continue;
    int a_side = part.in_a(c.i) ? c.i : c.j;
    int b_side = part.in_a(c.i) ? c.j : c.i;
    sum += escale * c.value * chi.chi(a_side, b_side);
    ++crossing;
  }
  if (crossing == 0)
    throw ValidationError("witness_R: no couplings cross the cut (N_AB = 0); R is undefined");
  return std::abs(sum) / (4.0 * crossing);
}

/// W_chi = sqrt(G / (1 + G)) with G the geometric mean of the R_AB over all
/// bipartitions; bounded in [0, 1) and zero when any R_AB vanishes.
inline double witness_Wchi(std::span<const double> r_values) {
  if (r_values.empty()) throw ValidationError("witness_Wchi: no R values");
  double log_sum = 0.0;
  for (double r : r_values) {
    if (!(r >= 0.0)) throw ValidationError("witness_Wchi: R values must be >= 0");
    if (r == 0.0) return 0.0;
    log_sum += std::log(r);
  }
  double g = std::exp(log_sum / static_cast<double>(r_values.size()));
  return std::sqrt(g / (1.0 + g));
}

/// Entanglement witness W = |phi><phi|^{T_A} built from the eigenvector phi
/// of |psi1><psi1|^{T_A} with the most negative eigenvalue. Nonnegative on
/// every A|B-separable state; its expectation on psi1 itself equals that
/// most negative eigenvalue.
struct WitnessOperator {
  Eigen::MatrixXcd matrix;
  Eigen::VectorXcd phi;
  Bipartition part;
  /// Most negative eigenvalue of the partial transpose of |psi1><psi1|;
  /// equals Tr[W |psi1><psi1|].
  double lambda_min = 0.0;
};

inline WitnessOperator construct_witness_operator(const Eigen::VectorXcd& psi1,
                                                  const Bipartition& part) {
  std::size_t dim = std::size_t{1} << part.n();
  if (psi1.size() != static_cast<Eigen::Index>(dim))
    throw ValidationError("construct_witness_operator: state dimension does not match cut");
  Eigen::VectorXcd psi = psi1 / psi1.norm();
  Eigen::MatrixXcd pt = partial_transpose(psi * psi.adjoint(), part);
  Spectrum eig = eigendecompose(pt);
  double lambda_min = eig.energies[0];
  if (lambda_min >= -1e-9)
    throw ValidationError(
        "construct_witness_operator: state is separable across this cut (min PT eigenvalue " +
        std::to_string(lambda_min) + "); no witness exists");
  // Ties inside a degenerate minimal eigenspace resolve to the solver's
  // first column under the fixed phase convention; a convention, not physics.
  Eigen::VectorXcd phi = eig.states.col(0);
  return WitnessOperator{partial_transpose(phi * phi.adjoint(), part), phi, part, lambda_min};
}

/// Minimum of Tr[W (sigma_A (x) sigma_B)] over Haar-random pure product
/// states; used as a randomized separable-positivity check.
inline double min_product_expectation(const WitnessOperator& w, int samples, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("min_product_expectation: samples must be >= 1");
  std::mt19937_64 rng(seed);
  Eigen::Index da = Eigen::Index{1} << w.part.size_a();
  Eigen::Index db = Eigen::Index{1} << w.part.size_b();
  double min_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    Eigen::VectorXcd a = random_state(da, rng);
    Eigen::VectorXcd b = random_state(db, rng);
    Eigen::VectorXcd v = embed_product(a, b, w.part);
    min_val = std::min(min_val, (v.adjoint() * w.matrix * v)(0, 0).real());
  }
  return min_val;
}

/// Range basis of W = |phi><phi|^{T_A} straight from phi's Schmidt pairs:
/// PT(phi phi^+) lives on span{a_j^* (x) b_i}.
inline RangeHint witness_range_hint(const WitnessOperator& w) {
  SchmidtDecomposition sd = schmidt_decompose(w.phi, w.part);
  const double cut = 1e-9;
  Eigen::Index r = 0;
  while (r < sd.values.size() && sd.values[r] > cut) ++r;
  RangeHint hint;
  hint.columns.resize(w.phi.size(), r * r);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j)
      hint.columns.col(col++) =
          embed_product(sd.a_states.col(j).conjugate(), sd.b_states.col(i), w.part);
  // W's eigenvalues are +/- s_i s_j; the trace norm of the part dropped with
  // the sub-cutoff Schmidt values is (sum_all s)^2 - (sum_kept s)^2.
  double sum_all = sd.values.sum();
  double sum_kept = sd.values.head(r).sum();
  hint.tail_norm = std::max(0.0, sum_all * sum_all - sum_kept * sum_kept) + 1e-12;
  return hint;
}

struct PopulationConstraint {
  double value = 1.0;
  double error = 0.0;
};

struct WitnessBoundOptions {
  SdpOptions sdp;
  /// Sanity guard on p1 + d1 + p2 + d2 <= 1 + slack.
  double window_sum_slack = 0.1;
};

/// Certified upper bound on Tr[W rho] over all states consistent with the
/// measured ground and first-excited populations. Negative bound certifies
/// entanglement across the witness's cut.
inline SdpResult sdp_upper_bound(const WitnessOperator& w, const Spectrum& spec,
                                 const PopulationConstraint& p1, const PopulationConstraint& p2,
                                 const WitnessBoundOptions& opt = {}) {
  if (spec.dim() != w.matrix.rows())
    throw ValidationError("sdp_upper_bound: spectrum dimension does not match witness");
  if (p1.error < 0.0 || p2.error < 0.0)
    throw ValidationError("sdp_upper_bound: population errors must be >= 0");
  if (p1.value - p1.error < 0.0)
    throw ValidationError("sdp_upper_bound: p1 - d1 must be >= 0");
  if (p1.value + p1.error + p2.value + p2.error > 1.0 + opt.window_sum_slack)
    throw ValidationError("sdp_upper_bound: p1 + d1 + p2 + d2 exceeds 1 beyond the allowed slack");
  std::vector<FidelityWindow> windows(2);
  windows[0] = {spec.states.col(0), p1.value - p1.error, p1.value + p1.error};
  windows[1] = {spec.states.col(1), std::max(0.0, p2.value - p2.error), p2.value + p2.error};
  return maximize_with_fidelity_windows(w.matrix, std::move(windows), opt.sdp,
                                        witness_range_hint(w));
}

struct RobustnessOptions {
  double delta_fraction = 0.08;
  double coupling_fraction = 0.05;
  int samples = 1000;
  std::uint64_t seed = 2024;
  WitnessBoundOptions bound;
};

struct RobustnessSummary {
  int samples = 0;
  int solver_failures = 0;
  double certified_fraction = 0.0;
  double unperturbed_bound = 0.0;
  double bound_min = 0.0;
  double bound_q05 = 0.0;
  double bound_median = 0.0;
  double bound_q95 = 0.0;
  double bound_max = 0.0;
};

/// Monte-Carlo robustness of the SDP certification against Hamiltonian
/// calibration uncertainty: every sample perturbs the per-qubit transverse
/// terms and the coupling energies, rebuilds psi1/psi2 and the witness, and
/// re-solves the SDP under the unchanged population constraints.
/// Deterministic for a fixed seed, independent of the worker count.
inline RobustnessSummary robustness_monte_carlo(const ProblemInstance& inst,
                                                const AnnealSchedule& schedule, double s,
                                                const Bipartition& part,
                                                const PopulationConstraint& p1,
                                                const PopulationConstraint& p2,
                                                const RobustnessOptions& opt = {}) {
  if (opt.samples < 1) throw ValidationError("robustness_monte_carlo: samples must be >= 1");
  double delta = schedule.delta(s);
  double escale = schedule.escale(s);

  auto bound_for = [&](const std::vector<double>& delta_scale,
                       const std::vector<double>& coupling_scale, bool fast) {
    AssembleOptions asm_opt;
    asm_opt.delta_scale = delta_scale;
    ProblemInstance sample_inst =
        coupling_scale.empty() ? inst : inst.with_scaled_couplings(coupling_scale);
    Spectrum spec = eigendecompose(assemble_from_energies(sample_inst, delta, escale, asm_opt));
    WitnessOperator w = construct_witness_operator(spec.states.col(0), part);
    WitnessBoundOptions bopt = opt.bound;
    if (fast) bopt.sdp.stop_when_certified_negative = true;
    return sdp_upper_bound(w, spec, p1, p2, bopt);
  };

  RobustnessSummary out;
  out.samples = opt.samples;
  out.unperturbed_bound = bound_for({}, {}, false).upper_bound;

  std::vector<double> bounds(static_cast<std::size_t>(opt.samples));
  std::vector<char> failed(static_cast<std::size_t>(opt.samples), 0);
  parallel_for(static_cast<std::size_t>(opt.samples), [&](std::size_t i) {
    std::mt19937_64 rng(opt.seed + 0x9e3779b97f4a7c15ull * (i + 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> dscale(static_cast<std::size_t>(inst.n()));
    for (auto& v : dscale) v = std::max(0.0, 1.0 + opt.delta_fraction * gauss(rng));
    std::vector<double> jscale(inst.couplings().size());
    for (auto& v : jscale) v = std::max(0.0, 1.0 + opt.coupling_fraction * gauss(rng));
    try {
      bounds[i] = bound_for(dscale, jscale, true).upper_bound;
    } catch (const Error&) {
      failed[i] = 1;
      bounds[i] = std::numeric_limits<double>::quiet_NaN();
    }
  });

  std::vector<double> ok;
  int certified = 0;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (failed[i]) {
      ++out.solver_failures;
      continue;
    }
    ok.push_back(bounds[i]);
    if (bounds[i] < 0.0) ++certified;
  }
  out.certified_fraction = ok.empty() ? 0.0 : static_cast<double>(certified) / static_cast<double>(ok.size());
  if (!ok.empty()) {
    std::sort(ok.begin(), ok.end());
    auto quantile = [&](double q) {
      double pos = q * static_cast<double>(ok.size() - 1);
      auto lo = static_cast<std::size_t>(pos);
      auto hi = std::min(lo + 1, ok.size() - 1);
      double w = pos - static_cast<double>(lo);
      return (1.0 - w) * ok[lo] + w * ok[hi];
    };
    out.bound_min = ok.front();
    out.bound_q05 = quantile(0.05);
    out.bound_median = quantile(0.5);
    out.bound_q95 = quantile(0.95);
    out.bound_max = ok.back();
  }
  return out;
}

}  // namespace qaspect
