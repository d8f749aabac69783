// Acceptance suite: every release criterion evaluated at its frozen
// tolerance, one [PASS]/[FAIL]/[SKIP] line per criterion. Exit code equals
// the number of failures. Criteria 13-16 compare against device-schedule
// values and run only when QASPECT_SCHEDULE_FILE points at a digitized
// schedule table; the built-in synthetic schedule cannot reproduce them.

#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qaspect/qaspect.hpp"

using namespace qaspect;

namespace {

int failures = 0;

struct CheckFailure {
  std::string detail;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw CheckFailure{detail};
}

std::string fmt(double v) { return format_number(v); }

void criterion(int id, const std::string& label, const std::function<std::string()>& body) {
  char tag[8];
  std::snprintf(tag, sizeof tag, "%02d", id);
  try {
    std::string detail = body();
    std::cout << "[PASS] " << tag << " " << label;
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << "\n";
  } catch (const CheckFailure& f) {
    ++failures;
    std::cout << "[FAIL] " << tag << " " << label << " -- " << f.detail << "\n";
  } catch (const std::exception& e) {
    ++failures;
    std::cout << "[FAIL] " << tag << " " << label << " -- exception: " << e.what() << "\n";
  }
}

void skip(int id, const std::string& label, const std::string& why) {
  char tag[8];
  std::snprintf(tag, sizeof tag, "%02d", id);
  std::cout << "[SKIP] " << tag << " " << label << " -- " << why << "\n";
}

AnnealSchedule flat_schedule(double delta, double escale) {
  return AnnealSchedule({{0.0, delta, escale}, {1.0, delta, escale}});
}

ProblemInstance fm_chain(int n) {
  std::vector<Coupling> couplings;
  for (int q = 0; q + 1 < n; ++q) couplings.push_back({q, q + 1, -2.5});
  return ProblemInstance(n, std::vector<double>(static_cast<std::size_t>(n), 0.0),
                         std::move(couplings));
}

double log_log_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  auto n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------

void schedule_independent() {
  const ProblemInstance fm2 = ProblemInstance::preset("fm2");
  const ProblemInstance fm8 = ProblemInstance::preset("fm8");
  const AnnealSchedule synthetic = AnnealSchedule::synthetic_default();
  const Temperature bath = Temperature::from_mk(12.5);
  const double fm8_mid_s = 0.28;  // gap 1.07 GHz >> kT on the synthetic schedule

  criterion(1, "Bell-state fixtures C = 1, N = 0.5, Ef = 1 (tol 1e-9)", [&] {
    Eigen::VectorXcd bell = bell_plus();
    Eigen::MatrixXcd rho = bell * bell.adjoint();
    double c = concurrence(rho);
    double neg = negativity(rho, Bipartition(1u, 2));
    double ef = entanglement_of_formation(c);
    require(std::abs(c - 1.0) < 1e-9, "C = " + fmt(c));
    require(std::abs(neg - 0.5) < 1e-9, "N = " + fmt(neg));
    require(std::abs(ef - 1.0) < 1e-9, "Ef = " + fmt(ef));
    return "C = " + fmt(c) + ", N = " + fmt(neg) + ", Ef = " + fmt(ef);
  });

  criterion(2, "Ef(0.53) = 0.388 +- 0.001", [&] {
    double ef = entanglement_of_formation(0.53);
    require(std::abs(ef - 0.388) < 1e-3, "Ef = " + fmt(ef));
    return "Ef = " + fmt(ef);
  });

  criterion(3, "two-qubit analytic gap on 100 random triples (rel tol 1e-10)", [&] {
    std::mt19937_64 rng(314159);
    std::uniform_real_distribution<double> delta_dist(0.05, 10.0);
    std::uniform_real_distribution<double> escale_dist(0.05, 8.0);
    std::uniform_real_distribution<double> j_dist(-4.0, -0.2);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      double delta = delta_dist(rng), escale = escale_dist(rng), j = j_dist(rng);
      ProblemInstance pair(2, {0.0, 0.0}, {{0, 1, j}});
      double gap = extract_gap(eigendecompose(assemble_from_energies(pair, delta, escale)));
      double jt = std::abs(j) * escale;
      double expected = std::sqrt(jt * jt + delta * delta) - jt;
      worst = std::max(worst, std::abs(gap - expected) / expected);
    }
    require(worst < 1e-10, "worst relative error " + fmt(worst));
    return "worst relative error " + fmt(worst);
  });

  criterion(4, "gap scaling slope equals N within 5% for N = 2, 3, 4", [&] {
    struct Window {
      int n;
      double lo, hi;
    };
    std::string detail;
    for (const Window& w : {Window{2, 0.02, 0.1}, Window{3, 0.05, 0.2}, Window{4, 0.1, 0.3}}) {
      ProblemInstance chain = fm_chain(w.n);
      std::vector<double> deltas, gaps;
      for (int i = 0; i < 6; ++i) {
        double delta = w.lo * std::pow(w.hi / w.lo, i / 5.0);
        deltas.push_back(delta);
        gaps.push_back(extract_gap(eigendecompose(assemble_from_energies(chain, delta, 1.0))));
      }
      double slope = log_log_slope(deltas, gaps);
      require(std::abs(slope - w.n) / w.n < 0.05,
              "N = " + std::to_string(w.n) + " slope " + fmt(slope));
      detail += (detail.empty() ? "" : ", ") + std::string("N=") + std::to_string(w.n) +
                " slope " + fmt(slope);
    }
    return detail;
  });

  criterion(5, "bipartition count N_p = 127 for n = 8", [&] {
    auto parts = enumerate_bipartitions(8);
    require(parts.size() == 127, "got " + std::to_string(parts.size()));
    return "127 canonical bipartitions";
  });

  criterion(6, "negativity: trace-norm route vs eigenvalue sum on 1000 random states (tol 1e-10)",
            [&] {
    std::mt19937_64 rng(2718);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      int n = 2 + trial % 3;
      auto dim = static_cast<Eigen::Index>(1) << n;
      Eigen::MatrixXcd rho = random_density_matrix(dim, 1 + trial % 4, rng);
      auto parts = enumerate_bipartitions(n);
      const Bipartition& part = parts[static_cast<std::size_t>(trial) % parts.size()];
      double via_eigs = negativity(rho, part);
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(partial_transpose(rho, part));
      double via_trace = 0.5 * (svd.singularValues().sum() - 1.0);
      worst = std::max(worst, std::abs(via_eigs - via_trace));
    }
    require(worst < 1e-10, "worst deviation " + fmt(worst));
    return "worst deviation " + fmt(worst);
  });

  criterion(7, "W_chi matches the fm2 ground-state concurrence at degeneracy within 1%", [&] {
    std::string detail;
    for (double s : {0.3, 0.37, 0.45}) {
      SusceptibilityMatrix chi = cross_susceptibility(fm2, synthetic, s);
      std::vector<double> rv{witness_R(chi, fm2, synthetic, s, Bipartition(1u, 2))};
      double wchi = witness_Wchi(rv);
      double c = concurrence_pure(
          eigendecompose(assemble_hamiltonian(fm2, synthetic, s)).states.col(0));
      require(std::abs(wchi - c) / c < 0.01,
              "s = " + fmt(s) + ": W_chi = " + fmt(wchi) + " vs C = " + fmt(c));
      detail += (detail.empty() ? "" : ", ") + ("s=" + fmt(s) + " rel diff " +
                fmt(std::abs(wchi - c) / c));
    }
    return detail;
  });

  criterion(8, "SDP with P1 = 1, delta = 0 reproduces the PT minimum (tol 1e-6, gap certified)",
            [&] {
    Spectrum spec = eigendecompose(assemble_hamiltonian(fm8, synthetic, fm8_mid_s));
    WitnessOperator w = construct_witness_operator(spec.states.col(0), Bipartition(0x0F, 8));
    SdpResult res = sdp_upper_bound(w, spec, {1.0, 0.0}, {0.0, 0.0});
    require(res.status == SdpStatus::optimal, "status not optimal: " + res.message);
    require(std::abs(res.upper_bound - w.lambda_min) < 1e-6,
            "bound " + fmt(res.upper_bound) + " vs lambda_min " + fmt(w.lambda_min));
    require(res.duality_gap >= -1e-9 && res.duality_gap < 1e-6,
            "duality gap " + fmt(res.duality_gap));
    return "bound " + fmt(res.upper_bound) + " = lambda_min " + fmt(w.lambda_min) +
           ", certified gap " + fmt(res.duality_gap);
  });

  criterion(9, "witness separable-positivity over 10^4 product states per witness (>= -1e-9)",
            [&] {
    std::vector<WitnessOperator> witnesses;
    witnesses.push_back(construct_witness_operator(bell_plus(), Bipartition(1u, 2)));
    for (std::uint32_t mask : {0x01u, 0x0Fu})
      witnesses.push_back(construct_witness_operator(ghz_state(8), Bipartition(mask, 8)));
    Spectrum spec = eigendecompose(assemble_hamiltonian(fm8, synthetic, fm8_mid_s));
    for (std::uint32_t mask : {0x01u, 0x0Fu, 0x55u, 0x6Du})
      witnesses.push_back(construct_witness_operator(spec.states.col(0), Bipartition(mask, 8)));
    double global_min = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 1234;
    for (const auto& w : witnesses)
      global_min = std::min(global_min, min_product_expectation(w, 10000, seed++));
    require(global_min >= -1e-9, "min expectation " + fmt(global_min));
    return std::to_string(witnesses.size()) + " witnesses, min expectation " + fmt(global_min);
  });

  criterion(10, "population protocol round trip (tol 1e-6) and conservation (1e-12)", [&] {
    AnnealSchedule late = flat_schedule(1.2, 2.0);
    ProbeConfig probe;
    probe.jp_ghz = -2.0;
    Spectrum spec = eigendecompose(assemble_hamiltonian(fm2, late, 0.5));
    Eigen::VectorXd boltzmann = boltzmann_populations(spec, bath);
    PopulationEstimate est = simulate_population_protocol(fm2, late, 0.5, bath, probe);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < boltzmann.size(); ++i)
      worst = std::max(worst, std::abs(est.p[i] - boltzmann[i]));
    require(worst < 1e-6, "worst population deviation " + fmt(worst));

    // Conservation, recomputed from independent Boltzmann weights: at every
    // alignment, P^L + sum_m P^R_m must equal 1.
    double kt = bath.as_ghz();
    double z = 0.0;
    for (Eigen::Index i = 0; i < spec.dim(); ++i)
      z += std::exp(-(spec.energies[i] - spec.energies[0]) / kt);
    double worst_conservation = 0.0;
    for (Eigen::Index n = 0; n < spec.dim(); ++n) {
      double w_n = std::exp(-(spec.energies[n] - spec.energies[0]) / kt);
      double sum_right = est.pl_raw[static_cast<std::size_t>(n)] / w_n * z;
      worst_conservation = std::max(
          worst_conservation,
          std::abs(est.pl_raw[static_cast<std::size_t>(n)] + sum_right - 1.0));
    }
    require(worst_conservation < 1e-12, "conservation residual " + fmt(worst_conservation));
    return "population deviation " + fmt(worst) + ", conservation residual " +
           fmt(worst_conservation);
  });

  criterion(11, "QTS peak recovery: 1% on a wide gap, unresolved below the linewidth", [&] {
    ProbeConfig probe;
    probe.jp_ghz = -1.5;
    probe.linewidth_ghz = 0.4;
    // Window the probe bias around the two lowest levels, the region the
    // Gaussian fits are taken over.
    auto doublet_window = [&](double s) {
      ProbeConfig peek = probe;
      peek.eps_p_grid = {0.0};
      RateSpectrum scout = simulate_rate_spectrum(fm2, synthetic, s, 0.0, peek);
      ProbeConfig windowed = probe;
      double lo = scout.resonances[0] - 6.0 * probe.linewidth_ghz;
      double hi = scout.resonances[1] + 6.0 * probe.linewidth_ghz;
      for (double v = lo; v <= hi; v += probe.linewidth_ghz / 10.0)
        windowed.eps_p_grid.push_back(v);
      return windowed;
    };

    double s_wide = 0.45;  // synthetic-schedule gap 1.76 GHz > 1.2 GHz
    RateSpectrum wide = simulate_rate_spectrum(fm2, synthetic, s_wide, 0.0, doublet_window(s_wide));
    double gap = extract_gap(wide.system);
    require(gap > 1.2, "operating point gap " + fmt(gap));
    PeakFit fit = fit_peaks(wide, 2);
    require(!fit.unresolved, "unexpected unresolved flag");
    require(std::abs(fit.gap_ghz - gap) / gap < 0.01,
            "fitted " + fmt(fit.gap_ghz) + " vs " + fmt(gap));

    double s_narrow = 0.65;  // synthetic-schedule gap 0.25 GHz < 0.4 GHz
    RateSpectrum narrow =
        simulate_rate_spectrum(fm2, synthetic, s_narrow, 0.0, doublet_window(s_narrow));
    double small_gap = extract_gap(narrow.system);
    require(small_gap < 0.4, "narrow point gap " + fmt(small_gap));
    PeakFit narrow_fit = fit_peaks(narrow, 2);
    require(narrow_fit.unresolved, "missing unresolved flag at gap " + fmt(small_gap));
    return "fitted " + fmt(fit.gap_ghz) + " vs eigen-gap " + fmt(gap) + "; gap " +
           fmt(small_gap) + " flagged unresolved";
  });

  criterion(12, "robustness: 10^3 perturbed Hamiltonians (8%/5%) all certify mid-anneal", [&] {
    Spectrum spec = eigendecompose(assemble_hamiltonian(fm8, synthetic, fm8_mid_s));
    Eigen::VectorXd p = boltzmann_populations(spec, bath);
    PopulationConstraint p1{p[0], 0.02}, p2{p[1], 0.02};

    // Median cut of the unperturbed bounds across all 127 bipartitions.
    auto parts = enumerate_bipartitions(8);
    std::vector<std::pair<double, std::size_t>> ranked(parts.size());
    parallel_for(parts.size(), [&](std::size_t k) {
      WitnessOperator w = construct_witness_operator(spec.states.col(0), parts[k]);
      ranked[k] = {sdp_upper_bound(w, spec, p1, p2).upper_bound, k};
    });
    std::sort(ranked.begin(), ranked.end());
    require(ranked.back().first < 0.0,
            "not all cuts certified unperturbed; worst " + fmt(ranked.back().first));
    Bipartition median_cut = parts[ranked[ranked.size() / 2].second];

    RobustnessOptions opt;
    opt.samples = 1000;
    opt.seed = 424242;
    RobustnessSummary summary =
        robustness_monte_carlo(fm8, synthetic, fm8_mid_s, median_cut, p1, p2, opt);
    require(summary.solver_failures == 0,
            std::to_string(summary.solver_failures) + " solver failures");
    require(summary.certified_fraction == 1.0,
            "certified fraction " + fmt(summary.certified_fraction));
    return "all cuts certified (worst " + fmt(ranked.back().first) + "); 1000/1000 samples < 0, "
           "median bound " + fmt(summary.bound_median);
  });
}

// ---------------------------------------------------------------------------

void schedule_conditional(const char* schedule_path) {
  const std::string why =
      "needs a digitized device schedule; set QASPECT_SCHEDULE_FILE to run";
  if (schedule_path == nullptr) {
    skip(13, "fm2 gap 1.75 GHz at s = 0.339 and 1.21 GHz at s = 0.351 (15%)", why);
    skip(14, "fm8 gap 2.2 GHz at s = 0.271 and 1.66 GHz at s = 0.284 (15%)", why);
    skip(15, "fm2 concurrence peak 0.53 near s = 0.37 at 12.5 mK (15%)", why);
    skip(16, "fm8 global negativity nonzero for s < 0.315, vanishing after (15%)", why);
    return;
  }

  const AnnealSchedule device = AnnealSchedule::from_file(schedule_path);
  const ProblemInstance fm2 = ProblemInstance::preset("fm2");
  const ProblemInstance fm8 = ProblemInstance::preset("fm8");
  const Temperature bath = Temperature::from_mk(12.5);

  criterion(13, "fm2 gap 1.75 GHz at s = 0.339 and 1.21 GHz at s = 0.351 (15%)", [&] {
    double g1 = extract_gap(eigendecompose(assemble_hamiltonian(fm2, device, 0.339)));
    double g2 = extract_gap(eigendecompose(assemble_hamiltonian(fm2, device, 0.351)));
    require(std::abs(g1 - 1.75) / 1.75 < 0.15, "gap(0.339) = " + fmt(g1));
    require(std::abs(g2 - 1.21) / 1.21 < 0.15, "gap(0.351) = " + fmt(g2));
    return "gap(0.339) = " + fmt(g1) + ", gap(0.351) = " + fmt(g2);
  });

  criterion(14, "fm8 gap 2.2 GHz at s = 0.271 and 1.66 GHz at s = 0.284 (15%)", [&] {
    double g1 = extract_gap(eigendecompose(assemble_hamiltonian(fm8, device, 0.271)));
    double g2 = extract_gap(eigendecompose(assemble_hamiltonian(fm8, device, 0.284)));
    require(std::abs(g1 - 2.2) / 2.2 < 0.15, "gap(0.271) = " + fmt(g1));
    require(std::abs(g2 - 1.66) / 1.66 < 0.15, "gap(0.284) = " + fmt(g2));
    return "gap(0.271) = " + fmt(g1) + ", gap(0.284) = " + fmt(g2);
  });

  criterion(15, "fm2 concurrence peak 0.53 near s = 0.37 at 12.5 mK (15%)", [&] {
    std::vector<double> grid;
    for (double s = 0.30; s <= 0.45 + 1e-9; s += 0.005) grid.push_back(s);
    MeasureOptions opt;
    opt.mc_samples = 0;
    MeasureSeries series = measure_series(fm2, device, bath, grid, opt);
    std::size_t peak = 0;
    for (std::size_t k = 0; k < series.points.size(); ++k)
      if (series.points[k].concurrence > series.points[peak].concurrence) peak = k;
    double value = series.points[peak].concurrence;
    double at = series.points[peak].s;
    require(std::abs(value - 0.53) / 0.53 < 0.15, "peak C = " + fmt(value));
    require(std::abs(at - 0.37) < 0.05, "peak at s = " + fmt(at));
    return "peak C = " + fmt(value) + " at s = " + fmt(at);
  });

  criterion(16, "fm8 global negativity nonzero for s < 0.315, vanishing after (15%)", [&] {
    MeasureOptions opt;
    opt.mc_samples = 0;
    std::vector<double> early{0.25, 0.268};
    std::vector<double> late{0.365, 0.40};
    MeasureSeries on = measure_series(fm8, device, bath, early, opt);
    for (const auto& pt : on.points)
      require(pt.negativity > 0.0, "N(" + fmt(pt.s) + ") = " + fmt(pt.negativity));
    MeasureSeries off = measure_series(fm8, device, bath, late, opt);
    for (const auto& pt : off.points)
      require(pt.negativity < 1e-4, "N(" + fmt(pt.s) + ") = " + fmt(pt.negativity));
    return "nonzero at s = 0.25, 0.268; vanished by s = 0.365";
  });
}

}  // namespace

int main() {
  std::cout << "qaspect acceptance suite\n";
  schedule_independent();
  schedule_conditional(std::getenv("QASPECT_SCHEDULE_FILE"));
  std::cout << (failures == 0 ? "RESULT: all criteria passed\n"
                              : "RESULT: " + std::to_string(failures) + " criteria failed\n");
  return failures;
}
