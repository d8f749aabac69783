#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "qaspect/peakfit.hpp"
#include "qaspect/qts.hpp"

using namespace qaspect;

namespace {

// Flat schedule: delta and escale independent of s, handy for fixed points.
AnnealSchedule flat_schedule(double delta, double escale) {
  return AnnealSchedule({{0.0, delta, escale}, {1.0, delta, escale}});
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    area += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return area;
}

std::vector<double> grid_covering(const Eigen::VectorXd& resonances, double w, double step) {
  double lo = resonances.minCoeff() - 6.0 * w;
  double hi = resonances.maxCoeff() + 6.0 * w;
  std::vector<double> g;
  for (double v = lo; v <= hi + 0.5 * step; v += step) g.push_back(v);
  return g;
}

}  // namespace

TEST_CASE("line profiles have unit area") {
  for (Lineshape shape : {Lineshape::gaussian, Lineshape::lorentzian}) {
    double w = 0.4;
    std::vector<double> xs, ys;
    double span = shape == Lineshape::gaussian ? 8.0 : 4000.0;
    int points = shape == Lineshape::gaussian ? 4001 : 2000001;
    for (int i = 0; i < points; ++i) {
      double x = -span + 2.0 * span * i / (points - 1);
      xs.push_back(x);
      ys.push_back(line_profile(x, w, shape));
    }
    double tol = shape == Lineshape::gaussian ? 1e-6 : 1e-3;
    REQUIRE(trapezoid(xs, ys) == Approx(1.0).margin(tol));
  }
}

TEST_CASE("rate spectrum shows two low-energy peaks split by the gap") {
  ProblemInstance fm2 = ProblemInstance::preset("fm2");
  AnnealSchedule sched = flat_schedule(2.0, 1.0);
  ProbeConfig probe;
  probe.delta_p_ghz = 1e-3;
  probe.jp_ghz = -1.0;
  probe.linewidth_ghz = 0.05;  // well below the 0.70 GHz gap

  RateSpectrum rs = simulate_rate_spectrum(fm2, sched, 0.5, 0.0, probe);
  double gap = extract_gap(rs.system);
  REQUIRE(gap == Approx(std::sqrt(6.25 + 4.0) - 2.5).margin(1e-12));

  PeakFit fit = fit_peaks(rs, 2);
  REQUIRE_FALSE(fit.unresolved);
  REQUIRE(fit.gap_ghz == Approx(gap).margin(1e-3));
  // The prepared state overlaps both crossing branches about equally.
  REQUIRE(rs.weights[0] == Approx(0.5).margin(0.1));
  REQUIRE(rs.weights[1] == Approx(0.5).margin(0.1));
}

TEST_CASE("strong negative bias concentrates the weight on the adjacent eigenstate") {
  ProblemInstance fm2 = ProblemInstance::preset("fm2");
  AnnealSchedule sched = flat_schedule(2.0, 1.0);
  ProbeConfig probe;
  probe.jp_ghz = -1.0;
  RateSpectrum rs = simulate_rate_spectrum(fm2, sched, 0.5, -3.5, probe);
  // psi0L is the polarized down-down state, which is the biased ground state.
  REQUIRE(rs.weights[0] > 0.95);
  REQUIRE(rs.weights.tail(2).maxCoeff() < 1e-2);
}

TEST_CASE("raw rate scales as delta_p squared; normalized spectrum is invariant") {
  ProblemInstance fm2 = ProblemInstance::preset("fm2");
  AnnealSchedule sched = flat_schedule(2.0, 1.0);
  ProbeConfig probe;
  probe.delta_p_ghz = 1e-3;
  probe.jp_ghz = -1.0;
  RateSpectrum base = simulate_rate_spectrum(fm2, sched, 0.5, 0.0, probe);
  probe.delta_p_ghz = 2e-3;
  probe.eps_p_grid = base.eps_p;
  RateSpectrum doubled = simulate_rate_spectrum(fm2, sched, 0.5, 0.0, probe);
  for (std::size_t i = 0; i < base.eps_p.size(); ++i) {
    REQUIRE(doubled.gamma_raw[i] == Approx(4.0 * base.gamma_raw[i]).epsilon(1e-12));
    REQUIRE(doubled.gamma_norm[i] == Approx(base.gamma_norm[i]).margin(1e-12));
  }
}

TEST_CASE("raw rate integrates to gamma0 times the total weight") {
  ProblemInstance fm2 = ProblemInstance::preset("fm2");
  AnnealSchedule sched = flat_schedule(2.0, 1.0);
  ProbeConfig peek;
  peek.jp_ghz = -1.0;
  peek.eps_p_grid = {0.0};
  RateSpectrum probe_run = simulate_rate_spectrum(fm2, sched, 0.5, 0.0, peek);

  ProbeConfig probe;
  probe.jp_ghz = -1.0;
  probe.linewidth_ghz = 0.4;
  probe.eps_p_grid = grid_covering(probe_run.resonances, 0.4, 0.04);
  RateSpectrum rs = simulate_rate_spectrum(fm2, sched, 0.5, 0.0, probe);
  double area = trapezoid(rs.eps_p, rs.gamma_raw);
  double expected = rs.gamma0_per_us * rs.weights.sum();
  REQUIRE(area == Approx(expected).epsilon(1e-3));
}

TEST_CASE("well-separated peaks are recovered within half a percent") {
  ProblemInstance fm2 = ProblemInstance::preset("fm2");
  AnnealSchedule sched = flat_schedule(3.4369318, 1.0);  // gap 1.75 GHz
  ProbeConfig probe;
  probe.jp_ghz = -1.5;
  probe.linewidth_ghz = 0.4;
  RateSpectrum rs = simulate_rate_spectrum(fm2, sched, 0.5, 0.0, probe);
  double gap = extract_gap(rs.system);
  REQUIRE(gap == Approx(1.75).margin(1e-6));
  REQUIRE(gap > 3.0 * probe.linewidth_ghz);
  PeakFit fit = fit_peaks(rs, 2);
  REQUIRE_FALSE(fit.unresolved);
  REQUIRE(fit.gap_ghz == Approx(gap).epsilon(5e-3));
  REQUIRE(fit.peaks[0].center == Approx(rs.resonances[0]).epsilon(5e-3));
}

TEST_CASE("synthetic two-Gaussian fixture reproduces the 1.75 GHz splitting") {
  std::vector<double> xs, ys;
  for (double x = -2.0; x <= 4.0 + 1e-9; x += 0.02) {
    xs.push_back(x);
    double g1 = std::exp(-0.5 * x * x / (0.4 * 0.4));
    double g2 = 0.8 * std::exp(-0.5 * (x - 1.75) * (x - 1.75) / (0.4 * 0.4));
    ys.push_back(g1 + g2);
  }
  MultiGaussFit fit = fit_multi_gaussian(xs, ys, 2, 0.4);
  REQUIRE(fit.converged);
  REQUIRE(fit.peaks[1].center - fit.peaks[0].center == Approx(1.75).margin(1e-6));

  // Single clean Gaussian: centroid recovered to the grid tolerance.
  std::vector<double> y1;
  for (double x : xs) y1.push_back(0.7 * std::exp(-0.5 * (x - 0.3) * (x - 0.3) / 0.16));
  MultiGaussFit single = fit_multi_gaussian(xs, y1, 1, 0.4);
  REQUIRE(single.peaks[0].center == Approx(0.3).margin(1e-3));
}

TEST_CASE("peaks closer than the linewidth raise the unresolved flag") {
  std::vector<double> xs, ys;
  for (double x = -2.0; x <= 2.2 + 1e-9; x += 0.02) {
    xs.push_back(x);
    ys.push_back(std::exp(-0.5 * x * x / 0.16) +
                 std::exp(-0.5 * (x - 0.2) * (x - 0.2) / 0.16));
  }
  RateSpectrum fake;
  fake.eps_p = xs;
  fake.gamma_norm = ys;
  fake.linewidth_ghz = 0.4;
  PeakFit fit = fit_peaks(fake, 2);
  REQUIRE(fit.unresolved);
}

TEST_CASE("fit input validation") {
  RateSpectrum sparse;
  for (double x = 0.0; x < 4.0; x += 0.5) {  // 0.5 step cannot resolve w = 0.4
    sparse.eps_p.push_back(x);
    sparse.gamma_norm.push_back(std::exp(-0.5 * x * x / 0.16));
  }
  sparse.linewidth_ghz = 0.4;
  REQUIRE_THROWS_AS(fit_peaks(sparse, 1), ValidationError);
  REQUIRE_THROWS_AS(fit_peaks(sparse, 0), ValidationError);
}

TEST_CASE("population recovery algebra") {
  PopulationEstimate half = estimate_populations({{1.0, 0.5}});
  REQUIRE(half.p[0] == Approx(1.0).margin(1e-15));
  PopulationEstimate third = estimate_populations({{1.0, 1.0 / 3.0}});
  REQUIRE(third.p[0] == Approx(0.5).margin(1e-12));

  REQUIRE_THROWS_AS(estimate_populations({{1.0, 1.0}}), ValidationError);
  REQUIRE_THROWS_AS(estimate_populations({{1.0, -0.1}}), ValidationError);
  REQUIRE_THROWS_AS(estimate_populations({{1.0, 0.6}, {2.0, 0.6}}), ValidationError);
  REQUIRE_THROWS_AS(estimate_populations({}), ValidationError);
}

TEST_CASE("population protocol closes the Boltzmann loop") {
  ProblemInstance fm2 = ProblemInstance::preset("fm2");
  // Late-anneal flavor: modest gap against kT.
  AnnealSchedule sched = flat_schedule(1.2, 2.0);
  Temperature t = Temperature::from_mk(12.5);
  ProbeConfig probe;
  probe.jp_ghz = -2.0;

  Spectrum spec = eigendecompose(assemble_hamiltonian(fm2, sched, 0.5));
  Eigen::VectorXd boltzmann = boltzmann_populations(spec, t);
  PopulationEstimate est = simulate_population_protocol(fm2, sched, 0.5, t, probe);

  for (Eigen::Index i = 0; i < boltzmann.size(); ++i)
    REQUIRE(est.p[i] == Approx(boltzmann[i]).margin(1e-6));
  REQUIRE(est.p.sum() == Approx(1.0).margin(1e-12));
  REQUIRE(est.p[1] / est.p[0] ==
          Approx(std::exp(-extract_gap(spec) / t.as_ghz())).margin(1e-6));

  // Oracle for the measured left-state probability: w_n / (w_n + Z).
  double kt = t.as_ghz();
  double z = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i)
    z += std::exp(-(spec.energies[i] - spec.energies[0]) / kt);
  for (Eigen::Index i = 0; i < 4; ++i) {
    double w = std::exp(-(spec.energies[i] - spec.energies[0]) / kt);
    REQUIRE(est.pl_raw[static_cast<std::size_t>(i)] == Approx(w / (w + z)).margin(1e-12));
  }
}

TEST_CASE("population protocol limits") {
  ProblemInstance fm2 = ProblemInstance::preset("fm2");
  AnnealSchedule sched = flat_schedule(3.0, 1.0);
  ProbeConfig probe;
  probe.jp_ghz = -2.0;

  // T -> 0: the ground state holds everything, exactly.
  PopulationEstimate zero =
      simulate_population_protocol(fm2, sched, 0.5, Temperature::from_mk(0.0), probe);
  REQUIRE(zero.p[0] == 1.0);
  REQUIRE(zero.p[1] == 0.0);

  // Wide-gap regime: P1 within 1e-3 of unity at 12.5 mK.
  AnnealSchedule wide = flat_schedule(8.0, 1.0);
  PopulationEstimate cold =
      simulate_population_protocol(fm2, wide, 0.5, Temperature::from_mk(12.5), probe);
  REQUIRE(cold.p[0] == Approx(1.0).margin(1e-3));
}

TEST_CASE("weak probe coupling against kT emits a warning") {
  ProblemInstance fm2 = ProblemInstance::preset("fm2");
  AnnealSchedule sched = flat_schedule(2.0, 1.0);
  ProbeConfig probe;
  probe.jp_ghz = -0.3;  // comparable to kT at 12.5 mK
  probe.delta_p_ghz = 1e-3;
  RateSpectrum rs = simulate_rate_spectrum(fm2, sched, 0.5, 0.0, probe);
  REQUIRE_FALSE(rs.warnings.empty());

  probe.jp_ghz = -3.0;
  RateSpectrum quiet = simulate_rate_spectrum(fm2, sched, 0.5, 0.0, probe);
  REQUIRE(quiet.warnings.empty());
}
