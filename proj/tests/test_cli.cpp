#include <catch2/catch.hpp>

#include <cstdlib>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(QASPECT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Csv {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

Csv parse_csv(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  Csv out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string cell;
    if (out.columns.empty()) {
      while (std::getline(ss, cell, ',')) out.columns.push_back(cell);
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ','))
      row.push_back(cell == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
    out.rows.push_back(std::move(row));
  }
  return out;
}

int column_of(const Csv& csv, const std::string& name) {
  for (std::size_t i = 0; i < csv.columns.size(); ++i)
    if (csv.columns[i] == name) return static_cast<int>(i);
  FAIL("missing column " + name);
  return -1;
}

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / "qaspect_cli_tests";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli: h-axis spectrum exhibits the avoided crossing at zero bias") {
  fs::path out = temp_dir() / "fm2_h.csv";
  int code = run_cli("spectrum --preset fm2 --axis h --s 0.339 --h-min -4 --h-max 4 --points 41 --out " +
                     out.string());
  REQUIRE(code == 0);
  Csv csv = parse_csv(out);
  int gap_col = column_of(csv, "gap");
  int axis_col = column_of(csv, "axis_value");
  std::size_t kmin = 0;
  for (std::size_t k = 0; k < csv.rows.size(); ++k)
    if (csv.rows[k][gap_col] < csv.rows[kmin][gap_col]) kmin = k;
  REQUIRE(csv.rows[kmin][axis_col] == Approx(0.0).margin(1e-12));
  // Manifest sits alongside and parses as JSON.
  nlohmann::json manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
  REQUIRE(manifest["command"] == "spectrum");
  REQUIRE(manifest["schedule_rows"].size() > 0);
}

TEST_CASE("cli: fm8 gap drops below threshold earlier than fm2") {
  fs::path out2 = temp_dir() / "fm2_s.csv";
  fs::path out8 = temp_dir() / "fm8_s.csv";
  REQUIRE(run_cli("spectrum --preset fm2 --axis s --s-min 0.1 --s-max 0.6 --points 11 --out " +
                  out2.string()) == 0);
  REQUIRE(run_cli("spectrum --preset fm8 --axis s --s-min 0.1 --s-max 0.6 --points 11 --out " +
                  out8.string()) == 0);
  Csv fm2 = parse_csv(out2), fm8 = parse_csv(out8);
  int gap2 = column_of(fm2, "gap"), gap8 = column_of(fm8, "gap");
  auto first_below = [&](const Csv& csv, int col) {
    for (std::size_t k = 0; k < csv.rows.size(); ++k)
      if (csv.rows[k][col] < 1.0) return csv.rows[k][0];
    return 2.0;
  };
  REQUIRE(first_below(fm8, gap8) < first_below(fm2, gap2));
}

TEST_CASE("cli: empty grid and bad configs exit with code 2") {
  fs::path out = temp_dir() / "never.csv";
  REQUIRE(run_cli("spectrum --preset fm2 --axis s --points 0 --out " + out.string()) == 2);
  REQUIRE(run_cli("spectrum --preset fm2 --axis q --out " + out.string()) == 2);
  REQUIRE(run_cli("spectrum --axis s --out " + out.string()) == 2);           // no instance
  REQUIRE(run_cli("spectrum --preset nope --axis s --out " + out.string()) == 2);
  REQUIRE(run_cli("bogus-subcommand") == 2);
}

TEST_CASE("cli: populations agree between protocol and Boltzmann columns") {
  fs::path out = temp_dir() / "pops.csv";
  REQUIRE(run_cli("populations --preset fm2 --s-min 0.2 --s-max 0.5 --points 7 --out " +
                  out.string()) == 0);
  Csv csv = parse_csv(out);
  int p1 = column_of(csv, "P1"), p1b = column_of(csv, "P1_boltzmann");
  int p2 = column_of(csv, "P2"), p2b = column_of(csv, "P2_boltzmann");
  REQUIRE(csv.rows.size() == 7);
  for (const auto& row : csv.rows) {
    REQUIRE(row[p1] == Approx(row[p1b]).margin(1e-6));
    REQUIRE(row[p2] == Approx(row[p2b]).margin(1e-6));
  }
  // Early rows hold nearly all weight in the ground state.
  REQUIRE(csv.rows.front()[p1] > 0.99);
}

TEST_CASE("cli: byte-identical outputs for identical config and seed") {
  fs::path a = temp_dir() / "det_a.csv";
  fs::path b = temp_dir() / "det_b.csv";
  std::string args = "measures --preset fm2 --s-min 0.25 --s-max 0.45 --points 3 --samples 25 --seed 99 --out ";
  REQUIRE(run_cli(args + a.string()) == 0);
  REQUIRE(run_cli(args + b.string()) == 0);
  REQUIRE(slurp(a) == slurp(b));
  REQUIRE(slurp(a).find("C_err") != std::string::npos);
}

TEST_CASE("cli: measures emit the expected single-peaked concurrence") {
  fs::path out = temp_dir() / "measures.csv";
  REQUIRE(run_cli("measures --preset fm2 --s-min 0.15 --s-max 0.8 --points 14 --samples 0 --out " +
                  out.string()) == 0);
  Csv csv = parse_csv(out);
  int c_col = column_of(csv, "C");
  std::size_t peak = 0;
  for (std::size_t k = 0; k < csv.rows.size(); ++k)
    if (csv.rows[k][c_col] > csv.rows[peak][c_col]) peak = k;
  REQUIRE(peak > 0);
  REQUIRE(peak + 1 < csv.rows.size());
  REQUIRE(csv.rows[peak][c_col] > 0.5);
  REQUIRE(csv.rows.back()[c_col] < 0.1);
}

TEST_CASE("cli: spectrum --qts emits the false-color companion table") {
  fs::path out = temp_dir() / "fm2_qts_sweep.csv";
  REQUIRE(run_cli("spectrum --preset fm2 --axis h --s 0.35 --h-min -1 --h-max 1 --points 5 "
                  "--qts --probe-jp -1.5 --out " + out.string()) == 0);
  fs::path companion = out.string() + ".qts.csv";
  REQUIRE(fs::exists(companion));
  Csv csv = parse_csv(companion);
  REQUIRE(csv.columns == std::vector<std::string>{"axis_value", "eps_p_ghz", "gamma_norm"});
  // Five axis values, each with the shared bias grid; normalized rates in [0, 1].
  double max_gamma = 0.0;
  for (const auto& row : csv.rows) {
    REQUIRE(row[2] >= 0.0);
    REQUIRE(row[2] <= 1.0 + 1e-12);
    max_gamma = std::max(max_gamma, row[2]);
  }
  REQUIRE(max_gamma == Approx(1.0).margin(1e-9));
  REQUIRE(csv.rows.size() % 5 == 0);
}

TEST_CASE("cli: qts run with peak fit writes resolvable metadata") {
  fs::path out = temp_dir() / "qts.csv";
  REQUIRE(run_cli("qts --preset fm2 --s 0.3 --probe-jp -1.5 --fit 2 --out " + out.string()) == 0);
  std::string text = slurp(out);
  REQUIRE(text.find("# fit_gap_ghz:") != std::string::npos);
  REQUIRE(text.find("eps_p_ghz,gamma_norm,gamma_raw_per_us") != std::string::npos);
}

TEST_CASE("cli: witness-sdp certifies a mid-anneal cut") {
  fs::path out = temp_dir() / "witness.csv";
  REQUIRE(run_cli("witness-sdp --preset fm8 --s-min 0.28 --s-max 0.28 --points 1 "
                  "--partitions 15 --out " + out.string()) == 0);
  Csv csv = parse_csv(out);
  int bound = column_of(csv, "bound");
  int certified = column_of(csv, "certified");
  REQUIRE(csv.rows.size() == 1);
  REQUIRE(csv.rows[0][bound] < 0.0);
  REQUIRE(csv.rows[0][certified] == 1.0);
  REQUIRE(fs::exists(out.string() + ".summary.csv"));
}

TEST_CASE("cli: schedule and instance files round through the pipeline") {
  fs::path dir = temp_dir();
  fs::path sched_path = dir / "sched.csv";
  {
    std::ofstream sched(sched_path);
    sched << "s,delta_ghz,escale_ghz\n0.0,6.0,1.0\n1.0,1.0,4.0\n";
  }
  fs::path inst_path = dir / "inst.json";
  {
    std::ofstream inst(inst_path);
    inst << R"({"n": 3, "h": [0, 0, 0], "j": [[0,1,-2.5],[1,2,-2.5]]})";
  }
  fs::path out = dir / "chain.csv";
  REQUIRE(run_cli("spectrum --schedule " + sched_path.string() + " --instance " +
                  inst_path.string() + " --axis s --s-min 0.1 --s-max 0.9 --points 5 --out " +
                  out.string()) == 0);
  Csv csv = parse_csv(out);
  REQUIRE(csv.rows.size() == 5);
  // Gap shrinks with s on this schedule.
  int gap = column_of(csv, "gap");
  REQUIRE(csv.rows.back()[gap] < csv.rows.front()[gap]);

  // Malformed schedule file fails with exit 2.
  fs::path bad = dir / "bad.csv";
  {
    std::ofstream b(bad);
    b << "s,delta_ghz,escale_ghz\n0.9,6.0,1.0\n0.1,1.0,4.0\n";
  }
  REQUIRE(run_cli("spectrum --schedule " + bad.string() + " --preset fm2 --axis s --out " +
                  out.string()) == 2);
}
