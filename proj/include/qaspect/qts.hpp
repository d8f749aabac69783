#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qaspect/errors.hpp"
#include "qaspect/hamiltonian.hpp"
#include "qaspect/peakfit.hpp"
#include "qaspect/spectrum.hpp"
#include "qaspect/thermal.hpp"

namespace qaspect {

enum class Lineshape { gaussian, lorentzian };

/// Unit-area line profile of width w centered at zero: Gaussian with sigma = w
/// or Lorentzian with HWHM = w.
inline double line_profile(double x, double w, Lineshape shape) {
  if (shape == Lineshape::gaussian) {
    double z = x / w;
    return std::exp(-0.5 * z * z) / (w * std::sqrt(2.0 * std::numbers::pi));
  }
  return (w / std::numbers::pi) / (x * x + w * w);
}

/// Simulated probe tunneling-rate spectrum
///   Gamma(eps_p) = Gamma0 * sum_n |<psi0L|n>|^2 * G(eps_p - (E_n - E0L); w).
struct RateSpectrum {
  std::vector<double> eps_p;      // GHz
  std::vector<double> gamma_norm; // peak-normalized, max = 1
  std::vector<double> gamma_raw;  // 1/us
  Eigen::VectorXd weights;        // |<psi0L|n>|^2 per system eigenstate
  Eigen::VectorXd resonances;     // E_n - E0L per system eigenstate, GHz
  double gamma0_per_us = 0.0;
  double linewidth_ghz = 0.0;
  Lineshape lineshape = Lineshape::gaussian;
  Spectrum system;                // spectrum of H_S at the working point
  double e0_left = 0.0;           // ground energy of H_S - 2 jp sz_attach
  std::vector<std::string> warnings;
};

struct RateSimOptions {
  Lineshape lineshape = Lineshape::gaussian;
  /// k_B T / h used for the |jp| >> kT advisory check.
  double kt_ghz = 12.5e-3 * k_boltzmann_ghz_per_kelvin;
  /// Rate prefactor: 1/us at delta_p = 1 MHz, scaling as delta_p^2.
  double gamma0_at_mhz = 1.0;
};

/// Left-manifold Hamiltonian seen by the system when the probe sits in its
/// down state: H_S - 2 jp sigma^z_attach (the eps_p offset is bookkept
/// separately as an energy shift of the prepared state).
inline HermitianOperator left_manifold_hamiltonian(const ProblemInstance& inst,
                                                   const AnnealSchedule& schedule, double s,
                                                   const ProbeConfig& probe,
                                                   const AssembleOptions& opt = {}) {
  HermitianOperator h = assemble_hamiltonian(inst, schedule, s, opt);
  int n = inst.n();
  std::size_t dim = std::size_t{1} << n;
  for (std::size_t x = 0; x < dim; ++x) {
    auto xi = static_cast<Eigen::Index>(x);
    h(xi, xi) += -2.0 * probe.jp_ghz * spin_z(x, probe.attach_to, n);
  }
  return h;
}

inline RateSpectrum simulate_rate_spectrum(const ProblemInstance& inst,
                                           const AnnealSchedule& schedule, double s,
                                           double h_uniform, const ProbeConfig& probe,
                                           const RateSimOptions& opt = {}) {
  probe.validate(inst.n(), schedule.delta(s));
  AssembleOptions assemble;
  assemble.h_override = h_uniform;

  RateSpectrum out;
  out.lineshape = opt.lineshape;
  out.linewidth_ghz = probe.linewidth_ghz;
  if (std::abs(probe.jp_ghz) < 10.0 * opt.kt_ghz)
    out.warnings.push_back("probe coupling |jp| = " + std::to_string(std::abs(probe.jp_ghz)) +
                           " GHz is not large against kT = " + std::to_string(opt.kt_ghz) +
                           " GHz; initial-state preparation fidelity is suspect");

  out.system = eigendecompose(assemble_hamiltonian(inst, schedule, s, assemble));
  Spectrum left = eigendecompose(left_manifold_hamiltonian(inst, schedule, s, probe, assemble));
  out.e0_left = left.energies[0];
  Eigen::VectorXcd psi0l = left.states.col(0);

  Eigen::Index dim = out.system.dim();
  out.weights.resize(dim);
  out.resonances.resize(dim);
  for (Eigen::Index nlev = 0; nlev < dim; ++nlev) {
    out.weights[nlev] = std::norm(psi0l.dot(out.system.states.col(nlev)));
    out.resonances[nlev] = out.system.energies[nlev] - out.e0_left;
  }

  out.gamma0_per_us = opt.gamma0_at_mhz * std::pow(probe.delta_p_ghz * 1e3, 2);

  std::vector<double> grid = probe.eps_p_grid;
  if (grid.empty()) {
    // Default window: the four lowest resonances padded by 6 linewidths.
    Eigen::Index levels = std::min<Eigen::Index>(4, dim);
    double lo = out.resonances[0] - 6.0 * probe.linewidth_ghz;
    double hi = out.resonances[levels - 1] + 6.0 * probe.linewidth_ghz;
    double step = probe.linewidth_ghz / 10.0;
    for (double v = lo; v <= hi + 0.5 * step; v += step) grid.push_back(v);
  }

  out.eps_p = std::move(grid);
  out.gamma_raw.resize(out.eps_p.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < out.eps_p.size(); ++i) {
    double rate = 0.0;
    for (Eigen::Index nlev = 0; nlev < dim; ++nlev)
      rate += out.weights[nlev] *
              line_profile(out.eps_p[i] - out.resonances[nlev], probe.linewidth_ghz, opt.lineshape);
    out.gamma_raw[i] = out.gamma0_per_us * rate;
    peak = std::max(peak, out.gamma_raw[i]);
  }
  out.gamma_norm.resize(out.eps_p.size());
  for (std::size_t i = 0; i < out.eps_p.size(); ++i)
    out.gamma_norm[i] = peak > 0.0 ? out.gamma_raw[i] / peak : 0.0;
  return out;
}

/// Gaussian peak fit of a rate spectrum: centroids with uncertainties and the
/// gap between the two lowest centroids. `unresolved` mirrors the situation
/// where the level separation shrinks below the probe linewidth.
struct PeakFit {
  std::vector<GaussianPeak> peaks;
  double gap_ghz = 0.0;
  double gap_err_ghz = 0.0;
  bool unresolved = false;
  bool converged = false;
  double residual_norm = 0.0;
};

inline PeakFit fit_peaks(const RateSpectrum& spectrum, int expected_count) {
  if (expected_count < 1) throw ValidationError("fit_peaks: expected_count must be >= 1");
  if (spectrum.eps_p.size() < 2) throw ValidationError("fit_peaks: spectrum grid too small");
  double span = spectrum.eps_p.back() - spectrum.eps_p.front();
  double step = span / static_cast<double>(spectrum.eps_p.size() - 1);
  if (step * 5.0 > spectrum.linewidth_ghz)
    throw ValidationError("fit_peaks: grid does not resolve the linewidth (need >= 5 samples per width)");

  MultiGaussFit fit = fit_multi_gaussian(spectrum.eps_p, spectrum.gamma_norm, expected_count,
                                         spectrum.linewidth_ghz);
  if (!fit.converged)
    throw NumericalError("fit_peaks: fit did not converge, residual norm " +
                         std::to_string(fit.residual_norm));

  PeakFit out;
  out.peaks = fit.peaks;
  out.converged = fit.converged;
  out.residual_norm = fit.residual_norm;
  for (std::size_t i = 0; i + 1 < out.peaks.size(); ++i) {
    double separation = out.peaks[i + 1].center - out.peaks[i].center;
    double width = std::max(out.peaks[i].sigma, out.peaks[i + 1].sigma);
    if (separation < width) out.unresolved = true;
  }
  if (out.peaks.size() >= 2) {
    out.gap_ghz = out.peaks[1].center - out.peaks[0].center;
    out.gap_err_ghz = std::hypot(out.peaks[0].center_err, out.peaks[1].center_err);
  }
  return out;
}

/// Populations recovered from probe-left occupation measurements via
/// P_n = P^L / (1 - P^L) at the aligned bias.
struct PopulationEstimate {
  Eigen::VectorXd p;            // per aligned level
  std::vector<double> pl_raw;   // the P^L inputs
  std::vector<double> energies; // GHz, aligned level energies
};

inline PopulationEstimate estimate_populations(
    const std::vector<std::pair<double, double>>& level_pl) {
  if (level_pl.empty()) throw ValidationError("estimate_populations: no measurements");
  PopulationEstimate out;
  out.p.resize(static_cast<Eigen::Index>(level_pl.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < level_pl.size(); ++i) {
    double pl = level_pl[i].second;
    if (!(pl >= 0.0) || pl > 1.0)
      throw ValidationError("estimate_populations: P^L must lie in [0, 1)");
    if (pl == 1.0)
      throw ValidationError("estimate_populations: P^L = 1 (probe never tunneled) is singular");
    out.energies.push_back(level_pl[i].first);
    out.pl_raw.push_back(pl);
    out.p[static_cast<Eigen::Index>(i)] = pl / (1.0 - pl);
    total += out.p[static_cast<Eigen::Index>(i)];
  }
  if (total > 1.0 + 1e-6)
    throw ValidationError("estimate_populations: recovered populations sum to " +
                          std::to_string(total) + " > 1");
  return out;
}

/// Fixed-point simulation of the equilibrium population protocol: for every
/// system level E_n the probe bias is set to align the prepared left state
/// with |n, up>, the composite reaches a Boltzmann distribution over the one
/// accessible left state and all right-manifold states (degenerate states
/// equally occupied), and the measured P^L is folded through
/// P_n = P^L/(1 - P^L). Conservation P^L + sum P^R = 1 holds by construction.
inline PopulationEstimate simulate_population_protocol(const ProblemInstance& inst,
                                                       const AnnealSchedule& schedule, double s,
                                                       Temperature t, const ProbeConfig& probe) {
  probe.validate(inst.n(), schedule.delta(s));
  Spectrum system = eigendecompose(assemble_hamiltonian(inst, schedule, s));
  std::vector<std::pair<double, double>> measured;
  Eigen::Index dim = system.dim();
  if (t.is_zero()) {
    // Zero-temperature limit: the composite sits in its lowest aligned state.
    Eigen::VectorXd p0 = boltzmann_populations(system, t);
    PopulationEstimate out;
    out.p = p0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      out.energies.push_back(system.energies[i]);
      out.pl_raw.push_back(p0[i] / (1.0 + p0[i]));
    }
    return out;
  }
  double kt = t.as_ghz();
  // System partition function relative to the ground energy.
  double z_sys = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i)
    z_sys += std::exp(-(system.energies[i] - system.energies[0]) / kt);
  for (Eigen::Index n = 0; n < dim; ++n) {
    double w_n = std::exp(-(system.energies[n] - system.energies[0]) / kt);
    double pl = w_n / (w_n + z_sys);
    measured.push_back({system.energies[n], pl});
  }
  return estimate_populations(measured);
}

}  // namespace qaspect
