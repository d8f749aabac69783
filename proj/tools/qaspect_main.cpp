// qaspect command-line tool: spectrum scans, simulated tunneling
// spectroscopy, equilibrium populations, entanglement measures, and
// SDP-certified witness bounds, emitted as plot-ready tables.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qaspect/qaspect.hpp"

namespace {

using namespace qaspect;
using nlohmann::json;

struct CommonOptions {
  std::string schedule = "synthetic";
  std::string preset;
  std::string instance_path;
  double temp_mk = 12.5;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 2024;
};

struct ProbeOptions {
  double delta_p = 1e-3;
  double jp = -1.0;
  int attach = 0;
  double linewidth = 0.4;
  std::string lineshape = "gaussian";
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--schedule", opt.schedule,
                  "Schedule file path, or 'synthetic' for the built-in synthetic schedule");
  cmd->add_option("--preset", opt.preset, "Instance preset: fm2 or fm8");
  cmd->add_option("--instance", opt.instance_path, "Instance JSON file");
  cmd->add_option("--temp-mk", opt.temp_mk, "Bath temperature in millikelvin (0 = T -> 0 limit)");
  cmd->add_option("--out", opt.out, "Output file path")->required();
  cmd->add_option("--format", opt.format, "Output format: csv or json");
  cmd->add_option("--seed", opt.seed, "Random seed for resampling/robustness");
}

void add_probe(CLI::App* cmd, ProbeOptions& opt) {
  cmd->add_option("--probe-delta-p", opt.delta_p, "Probe tunneling amplitude Delta_P in GHz");
  cmd->add_option("--probe-jp", opt.jp, "Probe coupling energy in GHz (sign sets polarization)");
  cmd->add_option("--probe-attach", opt.attach, "Qubit index the probe couples to");
  cmd->add_option("--linewidth", opt.linewidth, "Probe spectral width in GHz");
  cmd->add_option("--lineshape", opt.lineshape, "Line profile: gaussian or lorentzian");
}

AnnealSchedule resolve_schedule(const CommonOptions& opt) {
  if (opt.schedule == "synthetic") return AnnealSchedule::synthetic_default();
  return AnnealSchedule::from_file(opt.schedule);
}

ProblemInstance resolve_instance(const CommonOptions& opt) {
  if (!opt.preset.empty() && !opt.instance_path.empty())
    throw ValidationError("give either --preset or --instance, not both");
  if (!opt.preset.empty()) return ProblemInstance::preset(opt.preset);
  if (!opt.instance_path.empty()) return ProblemInstance::from_file(opt.instance_path);
  throw ValidationError("an instance is required: --preset fm2|fm8 or --instance <file>");
}

ProbeConfig resolve_probe(const ProbeOptions& opt) {
  ProbeConfig probe;
  probe.delta_p_ghz = opt.delta_p;
  probe.jp_ghz = opt.jp;
  probe.attach_to = opt.attach;
  probe.linewidth_ghz = opt.linewidth;
  return probe;
}

RateSimOptions resolve_rate_options(const ProbeOptions& opt) {
  RateSimOptions rate;
  if (opt.lineshape == "gaussian")
    rate.lineshape = Lineshape::gaussian;
  else if (opt.lineshape == "lorentzian")
    rate.lineshape = Lineshape::lorentzian;
  else
    throw ValidationError("--lineshape must be gaussian or lorentzian");
  return rate;
}

std::string companion_path(const CommonOptions& opt, const std::string& label) {
  return opt.out + "." + label + (opt.format == "json" ? ".json" : ".csv");
}

std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 1) throw ValidationError("grid needs at least one point");
  if (points == 1) return {lo};
  if (!(lo <= hi)) throw ValidationError("grid minimum exceeds maximum");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  return grid;
}

json manifest_base(const std::string& command, const CommonOptions& opt,
                   const AnnealSchedule& schedule, const ProblemInstance& inst) {
  json m;
  m["command"] = command;
  m["versions"] = {{"qaspect", QASPECT_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)}};
  m["seed"] = opt.seed;
  m["temp_mk"] = opt.temp_mk;
  m["format"] = opt.format;
  m["schedule_source"] = opt.schedule;
  auto rows = json::array();
  for (const auto& r : schedule.rows()) rows.push_back({r.s, r.delta_ghz, r.escale_ghz});
  m["schedule_rows"] = rows;
  m["instance"] = inst.to_json();
  if (!opt.preset.empty()) m["preset"] = opt.preset;
  return m;
}

// ---------------------------------------------------------------------------
// spectrum

struct SpectrumArgs {
  CommonOptions common;
  ProbeOptions probe;
  std::string axis = "s";
  double s_point = 0.35;
  double s_min = 0.0, s_max = 1.0;
  double h_min = -4.0, h_max = 4.0;
  int points = 51;
  int levels = 8;
  bool with_qts = false;
  double eps_min = 0.0, eps_max = 0.0;
  int eps_points = 0;
};

int run_spectrum(const SpectrumArgs& args) {
  AnnealSchedule schedule = resolve_schedule(args.common);
  ProblemInstance inst = resolve_instance(args.common);

  SpectrumScan scan;
  std::vector<double> grid;
  if (args.axis == "s") {
    grid = linspace(args.s_min, args.s_max, args.points);
    scan = scan_vs_s(inst, schedule, grid);
  } else if (args.axis == "h") {
    grid = linspace(args.h_min, args.h_max, args.points);
    scan = scan_vs_h(inst, schedule, args.s_point, grid);
  } else {
    throw ValidationError("--axis must be 's' or 'h'");
  }

  int dim = static_cast<int>(scan.levels.cols());
  int levels = std::clamp(args.levels, 2, dim);
  Table table;
  table.meta("axis", args.axis);
  if (args.axis == "h") {
    table.meta("s", args.s_point);
    table.meta("min_gap_ghz", scan.min_gap);
    table.meta("min_gap_at", scan.min_gap_at);
  } else {
    table.meta("gap_monotone_decreasing", scan.gap_monotone_decreasing ? "true" : "false");
  }
  std::vector<std::string> cols{"axis_value"};
  for (int l = 2; l <= levels; ++l) cols.push_back("E" + std::to_string(l) + "-E1");
  cols.push_back("gap");
  table.column_names = cols;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> row{grid[k]};
    for (int l = 1; l < levels; ++l) row.push_back(scan.levels(static_cast<Eigen::Index>(k), l));
    row.push_back(scan.gap[k]);
    table.rows.push_back(std::move(row));
  }
  write_table(table, args.common.out, args.common.format);

  json manifest = manifest_base("spectrum", args.common, schedule, inst);
  manifest["axis"] = args.axis;
  manifest["points"] = args.points;
  manifest["levels"] = levels;
  std::vector<std::string> outputs{args.common.out};

  if (args.with_qts) {
    ProbeConfig probe = resolve_probe(args.probe);
    // Shared bias grid covering the lowest resonances across the sweep.
    double w = probe.linewidth_ghz;
    double lo = args.eps_min, hi = args.eps_max;
    int eps_points = args.eps_points;
    if (eps_points <= 0) {
      lo = std::numeric_limits<double>::infinity();
      hi = -std::numeric_limits<double>::infinity();
      for (double edge : {grid.front(), grid.back(), grid[grid.size() / 2]}) {
        double s = args.axis == "s" ? edge : args.s_point;
        double h = args.axis == "s" ? 0.0 : edge;
        ProbeConfig peek = probe;
        peek.eps_p_grid = {0.0};
        RateSpectrum rs = simulate_rate_spectrum(inst, schedule, s, h, peek);
        Eigen::Index top = std::min<Eigen::Index>(3, rs.resonances.size() - 1);
        lo = std::min(lo, rs.resonances[0] - 6.0 * w);
        hi = std::max(hi, rs.resonances[top] + 6.0 * w);
      }
      eps_points = static_cast<int>(std::ceil((hi - lo) / (w / 10.0))) + 1;
    }
    std::vector<double> eps_grid = linspace(lo, hi, eps_points);

    Table qts_table;
    qts_table.meta("axis", args.axis);
    qts_table.meta("linewidth_ghz", w);
    qts_table.column_names = {"axis_value", "eps_p_ghz", "gamma_norm"};
    for (double g : grid) {
      double s = args.axis == "s" ? g : args.s_point;
      double h = args.axis == "s" ? 0.0 : g;
      ProbeConfig point_probe = probe;
      point_probe.eps_p_grid = eps_grid;
      RateSpectrum rs =
          simulate_rate_spectrum(inst, schedule, s, h, point_probe, resolve_rate_options(args.probe));
      for (std::size_t i = 0; i < rs.eps_p.size(); ++i)
        qts_table.rows.push_back({g, rs.eps_p[i], rs.gamma_norm[i]});
    }
    std::string qts_path = companion_path(args.common, "qts");
    write_table(qts_table, qts_path, args.common.format);
    outputs.push_back(qts_path);
    manifest["probe"] = {{"delta_p", probe.delta_p_ghz},
                         {"jp", probe.jp_ghz},
                         {"attach", probe.attach_to},
                         {"linewidth", probe.linewidth_ghz}};
  }
  manifest["outputs"] = outputs;
  write_manifest(args.common.out, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// qts

struct QtsArgs {
  CommonOptions common;
  ProbeOptions probe;
  double s = 0.35;
  double h = 0.0;
  double eps_min = 0.0, eps_max = 0.0;
  int eps_points = 0;
  int fit_count = 0;
};

int run_qts(const QtsArgs& args) {
  AnnealSchedule schedule = resolve_schedule(args.common);
  ProblemInstance inst = resolve_instance(args.common);
  ProbeConfig probe = resolve_probe(args.probe);
  if (args.eps_points > 0)
    probe.eps_p_grid = linspace(args.eps_min, args.eps_max, args.eps_points);

  RateSpectrum rs =
      simulate_rate_spectrum(inst, schedule, args.s, args.h, probe, resolve_rate_options(args.probe));
  for (const auto& warning : rs.warnings) std::cerr << "warning: " << warning << "\n";

  Table table;
  table.meta("s", args.s);
  table.meta("h_uniform", args.h);
  table.meta("gamma0_per_us", rs.gamma0_per_us);
  table.meta("linewidth_ghz", rs.linewidth_ghz);
  if (args.fit_count > 0) {
    PeakFit fit = fit_peaks(rs, args.fit_count);
    table.meta("fit_gap_ghz", fit.gap_ghz);
    table.meta("fit_gap_err_ghz", fit.gap_err_ghz);
    table.meta("fit_unresolved", fit.unresolved ? "true" : "false");
    for (std::size_t i = 0; i < fit.peaks.size(); ++i)
      table.meta("fit_centroid_" + std::to_string(i + 1),
                 format_number(fit.peaks[i].center) + " +- " +
                     format_number(fit.peaks[i].center_err));
  }
  table.column_names = {"eps_p_ghz", "gamma_norm", "gamma_raw_per_us"};
  for (std::size_t i = 0; i < rs.eps_p.size(); ++i)
    table.rows.push_back({rs.eps_p[i], rs.gamma_norm[i], rs.gamma_raw[i]});
  write_table(table, args.common.out, args.common.format);

  json manifest = manifest_base("qts", args.common, schedule, inst);
  manifest["s"] = args.s;
  manifest["h_uniform"] = args.h;
  manifest["probe"] = {{"delta_p", probe.delta_p_ghz},
                       {"jp", probe.jp_ghz},
                       {"attach", probe.attach_to},
                       {"linewidth", probe.linewidth_ghz},
                       {"lineshape", args.probe.lineshape}};
  manifest["fit_count"] = args.fit_count;
  manifest["outputs"] = {args.common.out};
  write_manifest(args.common.out, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// populations

struct PopulationArgs {
  CommonOptions common;
  ProbeOptions probe;
  double s_min = 0.1, s_max = 0.6;
  int points = 26;
};

int run_populations(const PopulationArgs& args) {
  AnnealSchedule schedule = resolve_schedule(args.common);
  ProblemInstance inst = resolve_instance(args.common);
  ProbeConfig probe = resolve_probe(args.probe);
  Temperature t = Temperature::from_mk(args.common.temp_mk);
  std::vector<double> grid = linspace(args.s_min, args.s_max, args.points);

  Table table;
  table.meta("temp_mk", args.common.temp_mk);
  table.column_names = {"s", "P1", "P2", "P1_boltzmann", "P2_boltzmann"};
  std::vector<std::vector<double>> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    double s = grid[k];
    PopulationEstimate protocol = simulate_population_protocol(inst, schedule, s, t, probe);
    Spectrum spec = eigendecompose(assemble_hamiltonian(inst, schedule, s));
    Eigen::VectorXd boltzmann = boltzmann_populations(spec, t);
    rows[k] = {s, protocol.p[0], protocol.p[1], boltzmann[0], boltzmann[1]};
  });
  table.rows = rows;
  write_table(table, args.common.out, args.common.format);

  json manifest = manifest_base("populations", args.common, schedule, inst);
  manifest["s_grid"] = {args.s_min, args.s_max, args.points};
  manifest["outputs"] = {args.common.out};
  write_manifest(args.common.out, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// measures

struct MeasureArgs {
  CommonOptions common;
  double s_min = 0.1, s_max = 0.6;
  int points = 26;
  int levels = 2;
  int samples = 1000;
  bool with_wchi = false;
};

int run_measures(const MeasureArgs& args) {
  AnnealSchedule schedule = resolve_schedule(args.common);
  ProblemInstance inst = resolve_instance(args.common);
  Temperature t = Temperature::from_mk(args.common.temp_mk);
  std::vector<double> grid = linspace(args.s_min, args.s_max, args.points);

  MeasureOptions opt;
  opt.levels = args.levels;
  opt.mc_samples = args.samples;
  opt.seed = args.common.seed;
  MeasureSeries series = measure_series(inst, schedule, t, grid, opt);

  std::vector<double> wchi(grid.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<double>> rab(grid.size());
  std::vector<Bipartition> parts;
  if (args.with_wchi) {
    parts = enumerate_bipartitions(inst.n());
    parallel_for(grid.size(), [&](std::size_t k) {
      SusceptibilityMatrix chi = cross_susceptibility(inst, schedule, grid[k],
                                                      t.is_zero() ? std::optional<Temperature>{}
                                                                  : std::optional<Temperature>{t});
      std::vector<double> r_values;
      r_values.reserve(parts.size());
      for (const auto& part : parts)
        r_values.push_back(witness_R(chi, inst, schedule, grid[k], part));
      wchi[k] = witness_Wchi(r_values);
      rab[k] = std::move(r_values);
    });
  }

  Table table;
  table.meta("temp_mk", args.common.temp_mk);
  table.meta("levels", static_cast<double>(args.levels));
  table.meta("mc_samples", static_cast<double>(args.samples));
  table.column_names = {"s", "C", "C_err", "N", "N_err", "Ef"};
  if (args.with_wchi) table.column_names.push_back("wchi");
  for (std::size_t k = 0; k < series.points.size(); ++k) {
    const MeasurePoint& p = series.points[k];
    std::vector<double> row{p.s,          p.concurrence, p.concurrence_err,
                            p.negativity, p.negativity_err, p.formation};
    if (args.with_wchi) row.push_back(wchi[k]);
    table.rows.push_back(std::move(row));
  }
  write_table(table, args.common.out, args.common.format);
  std::vector<std::string> outputs{args.common.out};

  if (args.with_wchi) {
    Table rab_table;
    rab_table.meta("temp_mk", args.common.temp_mk);
    rab_table.column_names = {"s", "partition_id", "r_ab"};
    for (std::size_t k = 0; k < grid.size(); ++k)
      for (std::size_t c = 0; c < parts.size(); ++c)
        rab_table.rows.push_back({grid[k], static_cast<double>(parts[c].id()), rab[k][c]});
    std::string rab_path = companion_path(args.common, "rab");
    write_table(rab_table, rab_path, args.common.format);
    outputs.push_back(rab_path);
  }

  json manifest = manifest_base("measures", args.common, schedule, inst);
  manifest["s_grid"] = {args.s_min, args.s_max, args.points};
  manifest["levels"] = args.levels;
  manifest["samples"] = args.samples;
  manifest["wchi"] = args.with_wchi;
  manifest["outputs"] = outputs;
  write_manifest(args.common.out, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// witness-sdp

struct WitnessSdpArgs {
  CommonOptions common;
  double s_min = 0.2, s_max = 0.35;
  int points = 7;
  double delta_p1 = 0.02, delta_p2 = 0.02;
  std::vector<std::uint32_t> partitions;  // empty = all
  int mc_samples = 0;
  double scale_delta = 0.08, scale_j = 0.05;
};

int run_witness_sdp(const WitnessSdpArgs& args) {
  AnnealSchedule schedule = resolve_schedule(args.common);
  ProblemInstance inst = resolve_instance(args.common);
  Temperature t = Temperature::from_mk(args.common.temp_mk);
  std::vector<double> grid = linspace(args.s_min, args.s_max, args.points);

  std::vector<Bipartition> parts;
  if (args.partitions.empty()) {
    parts = enumerate_bipartitions(inst.n());
  } else {
    for (std::uint32_t mask : args.partitions) parts.emplace_back(mask, inst.n());
  }

  Table table;
  table.meta("temp_mk", args.common.temp_mk);
  table.meta("delta_p1", args.delta_p1);
  table.meta("delta_p2", args.delta_p2);
  table.column_names = {"s", "partition_id", "bound", "bound_err_lo", "bound_err_hi", "certified"};
  Table summary;
  summary.meta("series", "median/min/max of the per-cut certified bounds");
  summary.column_names = {"s",         "bound_median", "bound_min", "bound_max",
                          "cut_count", "all_certified"};

  for (double s : grid) {
    Spectrum spec = eigendecompose(assemble_hamiltonian(inst, schedule, s));
    Eigen::VectorXd boltzmann = boltzmann_populations(spec, t);
    PopulationConstraint p1{boltzmann[0], args.delta_p1};
    PopulationConstraint p2{boltzmann[1], args.delta_p2};
    std::vector<double> bounds(parts.size());
    std::vector<double> err_lo(parts.size(), 0.0), err_hi(parts.size(), 0.0);
    parallel_for(parts.size(), [&](std::size_t k) {
      WitnessOperator w = construct_witness_operator(spec.states.col(0), parts[k]);
      SdpResult res = sdp_upper_bound(w, spec, p1, p2);
      bounds[k] = res.upper_bound;
    });
    if (args.mc_samples > 0) {
      // Error bars from the Hamiltonian-uncertainty Monte Carlo.
      for (std::size_t k = 0; k < parts.size(); ++k) {
        RobustnessOptions ropt;
        ropt.delta_fraction = args.scale_delta;
        ropt.coupling_fraction = args.scale_j;
        ropt.samples = args.mc_samples;
        ropt.seed = args.common.seed + k;
        RobustnessSummary mc = robustness_monte_carlo(inst, schedule, s, parts[k], p1, p2, ropt);
        err_lo[k] = std::max(0.0, bounds[k] - mc.bound_q05);
        err_hi[k] = std::max(0.0, mc.bound_q95 - bounds[k]);
      }
    }
    bool all_certified = true;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      table.rows.push_back({s, static_cast<double>(parts[k].id()), bounds[k], err_lo[k],
                            err_hi[k], bounds[k] < 0.0 ? 1.0 : 0.0});
      if (!(bounds[k] < 0.0)) all_certified = false;
    }
    std::vector<double> sorted = bounds;
    std::sort(sorted.begin(), sorted.end());
    summary.rows.push_back({s, sorted[sorted.size() / 2], sorted.front(), sorted.back(),
                            static_cast<double>(sorted.size()), all_certified ? 1.0 : 0.0});
  }
  write_table(table, args.common.out, args.common.format);
  std::string summary_path = companion_path(args.common, "summary");
  write_table(summary, summary_path, args.common.format);

  json manifest = manifest_base("witness-sdp", args.common, schedule, inst);
  manifest["s_grid"] = {args.s_min, args.s_max, args.points};
  manifest["delta_p1"] = args.delta_p1;
  manifest["delta_p2"] = args.delta_p2;
  manifest["partitions"] = args.partitions;
  manifest["mc_samples"] = args.mc_samples;
  manifest["outputs"] = {args.common.out, summary_path};
  write_manifest(args.common.out, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// robustness

struct RobustnessArgs {
  CommonOptions common;
  double s = 0.3;
  double delta_p1 = 0.02, delta_p2 = 0.02;
  double scale_delta = 0.08, scale_j = 0.05;
  int samples = 1000;
  std::optional<std::uint32_t> partition;
};

int run_robustness(const RobustnessArgs& args) {
  AnnealSchedule schedule = resolve_schedule(args.common);
  ProblemInstance inst = resolve_instance(args.common);
  Temperature t = Temperature::from_mk(args.common.temp_mk);

  Spectrum spec = eigendecompose(assemble_hamiltonian(inst, schedule, args.s));
  Eigen::VectorXd boltzmann = boltzmann_populations(spec, t);
  PopulationConstraint p1{boltzmann[0], args.delta_p1};
  PopulationConstraint p2{boltzmann[1], args.delta_p2};

  Bipartition cut = [&] {
    if (args.partition) return Bipartition(*args.partition, inst.n());
    // Default: the cut with the median unperturbed bound.
    auto parts = enumerate_bipartitions(inst.n());
    std::vector<std::pair<double, std::size_t>> ranked(parts.size());
    parallel_for(parts.size(), [&](std::size_t k) {
      WitnessOperator w = construct_witness_operator(spec.states.col(0), parts[k]);
      ranked[k] = {sdp_upper_bound(w, spec, p1, p2).upper_bound, k};
    });
    std::sort(ranked.begin(), ranked.end());
    return parts[ranked[ranked.size() / 2].second];
  }();

  RobustnessOptions opt;
  opt.delta_fraction = args.scale_delta;
  opt.coupling_fraction = args.scale_j;
  opt.samples = args.samples;
  opt.seed = args.common.seed;
  RobustnessSummary summary = robustness_monte_carlo(inst, schedule, args.s, cut, p1, p2, opt);

  Table table;
  table.meta("temp_mk", args.common.temp_mk);
  table.meta("scale_delta", args.scale_delta);
  table.meta("scale_j", args.scale_j);
  table.column_names = {"s",           "partition_id",      "samples",      "certified_fraction",
                        "unperturbed", "bound_min",         "bound_q05",    "bound_median",
                        "bound_q95",   "bound_max",         "solver_failures"};
  table.rows.push_back({args.s, static_cast<double>(cut.id()), static_cast<double>(summary.samples),
                        summary.certified_fraction, summary.unperturbed_bound, summary.bound_min,
                        summary.bound_q05, summary.bound_median, summary.bound_q95,
                        summary.bound_max, static_cast<double>(summary.solver_failures)});
  write_table(table, args.common.out, args.common.format);

  json manifest = manifest_base("robustness", args.common, schedule, inst);
  manifest["s"] = args.s;
  manifest["partition_id"] = cut.id();
  manifest["samples"] = args.samples;
  manifest["scale_delta"] = args.scale_delta;
  manifest["scale_j"] = args.scale_j;
  manifest["delta_p1"] = args.delta_p1;
  manifest["delta_p2"] = args.delta_p2;
  manifest["outputs"] = {args.common.out};
  write_manifest(args.common.out, manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigenspectra, tunneling spectroscopy, and entanglement certification "
               "for small transverse-field Ising systems"};
  app.require_subcommand(1);

  SpectrumArgs spectrum_args;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Eigenspectrum scan vs s or uniform bias h");
  add_common(spectrum_cmd, spectrum_args.common);
  add_probe(spectrum_cmd, spectrum_args.probe);
  spectrum_cmd->add_option("--axis", spectrum_args.axis, "Scan axis: s or h")->required();
  spectrum_cmd->add_option("--s", spectrum_args.s_point, "Fixed s for h-axis scans");
  spectrum_cmd->add_option("--s-min", spectrum_args.s_min, "s grid start");
  spectrum_cmd->add_option("--s-max", spectrum_args.s_max, "s grid end");
  spectrum_cmd->add_option("--h-min", spectrum_args.h_min, "h grid start");
  spectrum_cmd->add_option("--h-max", spectrum_args.h_max, "h grid end");
  spectrum_cmd->add_option("--points", spectrum_args.points, "Grid point count");
  spectrum_cmd->add_option("--levels", spectrum_args.levels, "Number of levels in the table");
  spectrum_cmd->add_flag("--qts", spectrum_args.with_qts,
                         "Also emit the simulated tunneling-rate false-color table");
  spectrum_cmd->add_option("--eps-min", spectrum_args.eps_min, "Probe bias grid start (GHz)");
  spectrum_cmd->add_option("--eps-max", spectrum_args.eps_max, "Probe bias grid end (GHz)");
  spectrum_cmd->add_option("--eps-points", spectrum_args.eps_points, "Probe bias grid points");

  QtsArgs qts_args;
  auto* qts_cmd = app.add_subcommand("qts", "Simulated probe tunneling-rate spectrum at one point");
  add_common(qts_cmd, qts_args.common);
  add_probe(qts_cmd, qts_args.probe);
  qts_cmd->add_option("--s", qts_args.s, "Annealing point")->required();
  qts_cmd->add_option("--h-uniform", qts_args.h, "Uniform diagnostic bias");
  qts_cmd->add_option("--eps-min", qts_args.eps_min, "Probe bias grid start (GHz)");
  qts_cmd->add_option("--eps-max", qts_args.eps_max, "Probe bias grid end (GHz)");
  qts_cmd->add_option("--eps-points", qts_args.eps_points, "Probe bias grid points");
  qts_cmd->add_option("--fit", qts_args.fit_count, "Fit this many Gaussian peaks");

  PopulationArgs pop_args;
  auto* pop_cmd = app.add_subcommand("populations",
                                     "Equilibrium level populations: protocol vs Boltzmann");
  add_common(pop_cmd, pop_args.common);
  add_probe(pop_cmd, pop_args.probe);
  pop_cmd->add_option("--s-min", pop_args.s_min, "s grid start");
  pop_cmd->add_option("--s-max", pop_args.s_max, "s grid end");
  pop_cmd->add_option("--points", pop_args.points, "Grid point count");

  MeasureArgs measure_args;
  auto* measure_cmd = app.add_subcommand("measures",
                                         "Concurrence, negativity, and formation vs s");
  add_common(measure_cmd, measure_args.common);
  measure_cmd->add_option("--s-min", measure_args.s_min, "s grid start");
  measure_cmd->add_option("--s-max", measure_args.s_max, "s grid end");
  measure_cmd->add_option("--points", measure_args.points, "Grid point count");
  measure_cmd->add_option("--levels", measure_args.levels, "Thermal levels kept in rho");
  measure_cmd->add_option("--samples", measure_args.samples,
                          "Monte-Carlo resamples for uncertainty bands (0 = off)");
  measure_cmd->add_flag("--wchi", measure_args.with_wchi,
                        "Add the susceptibility witness column");

  WitnessSdpArgs witness_args;
  auto* witness_cmd = app.add_subcommand("witness-sdp",
                                         "Certified upper bounds on Tr[W rho] per bipartition");
  add_common(witness_cmd, witness_args.common);
  witness_cmd->add_option("--s-min", witness_args.s_min, "s grid start");
  witness_cmd->add_option("--s-max", witness_args.s_max, "s grid end");
  witness_cmd->add_option("--points", witness_args.points, "Grid point count");
  witness_cmd->add_option("--delta-p1", witness_args.delta_p1, "Uncertainty on P1");
  witness_cmd->add_option("--delta-p2", witness_args.delta_p2, "Uncertainty on P2");
  witness_cmd->add_option("--partitions", witness_args.partitions,
                          "Subset-A bitmasks to evaluate (default: all bipartitions)");
  witness_cmd->add_option("--mc-samples", witness_args.mc_samples,
                          "Monte-Carlo samples for per-cut bound error bars (0 = off)");
  witness_cmd->add_option("--scale-delta", witness_args.scale_delta,
                          "Fractional transverse-term perturbation for the error bars");
  witness_cmd->add_option("--scale-j", witness_args.scale_j,
                          "Fractional coupling perturbation for the error bars");

  RobustnessArgs robust_args;
  std::uint32_t robust_partition_raw = 0;
  auto* robust_cmd = app.add_subcommand("robustness",
                                        "Monte-Carlo robustness of the SDP certification");
  add_common(robust_cmd, robust_args.common);
  robust_cmd->add_option("--s", robust_args.s, "Annealing point")->required();
  auto* part_opt = robust_cmd->add_option("--partition", robust_partition_raw,
                                          "Subset-A bitmask (default: the median cut)");
  robust_cmd->add_option("--delta-p1", robust_args.delta_p1, "Uncertainty on P1");
  robust_cmd->add_option("--delta-p2", robust_args.delta_p2, "Uncertainty on P2");
  robust_cmd->add_option("--scale-delta", robust_args.scale_delta,
                         "Fractional perturbation of the transverse terms");
  robust_cmd->add_option("--scale-j", robust_args.scale_j,
                         "Fractional perturbation of the coupling energies");
  robust_cmd->add_option("--samples", robust_args.samples, "Perturbation sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (spectrum_cmd->parsed()) return run_spectrum(spectrum_args);
    if (qts_cmd->parsed()) return run_qts(qts_args);
    if (pop_cmd->parsed()) return run_populations(pop_args);
    if (measure_cmd->parsed()) return run_measures(measure_args);
    if (witness_cmd->parsed()) {
      return run_witness_sdp(witness_args);
    }
    if (robust_cmd->parsed()) {
      if (part_opt->count() > 0) robust_args.partition = robust_partition_raw;
      return run_robustness(robust_args);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
