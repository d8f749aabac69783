#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qaspect/errors.hpp"

namespace qaspect {

/// One knot of a tabulated annealing schedule: the transverse energy
/// delta(s) and the longitudinal scale escale(s), both in GHz (E/h).
struct ScheduleRow {
  double s = 0.0;
  double delta_ghz = 0.0;
  double escale_ghz = 0.0;
};

/// Tabulated annealing schedule, piecewise-linear in s. Queries outside
/// the tabulated range are errors; the schedule never extrapolates.
class AnnealSchedule {
 public:
  explicit AnnealSchedule(std::vector<ScheduleRow> rows) : rows_(std::move(rows)) {
    if (rows_.size() < 2) throw ValidationError("schedule needs at least two rows");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const auto& r = rows_[i];
      if (!std::isfinite(r.s) || !std::isfinite(r.delta_ghz) || !std::isfinite(r.escale_ghz))
        throw ValidationError("schedule row " + std::to_string(i) + " has non-finite value");
      if (r.s < 0.0 || r.s > 1.0)
        throw ValidationError("schedule s out of [0,1] at row " + std::to_string(i));
      if (r.delta_ghz < 0.0 || r.escale_ghz < 0.0)
        throw ValidationError("schedule energies must be >= 0 at row " + std::to_string(i));
      if (i > 0 && !(r.s > rows_[i - 1].s))
        throw ValidationError("schedule s values must be strictly increasing at row " +
                              std::to_string(i));
    }
  }

  /// Parses the delimited-text schedule format:
  ///   s,delta_ghz,escale_ghz
  ///   0.0,10.0,0.1
  /// Lines starting with '#' are ignored.
  static AnnealSchedule parse(std::istream& in) {
    std::vector<ScheduleRow> rows;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (!header_seen) {
        if (strip_spaces(t) != "s,delta_ghz,escale_ghz")
          throw ValidationError("schedule line " + std::to_string(lineno) +
                                ": expected header 's,delta_ghz,escale_ghz', got '" + t + "'");
        header_seen = true;
        continue;
      }
      rows.push_back(parse_row(t, lineno));
    }
    if (!header_seen) throw ValidationError("schedule stream has no header line");
    return AnnealSchedule(std::move(rows));
  }

  static AnnealSchedule from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open schedule file: " + path);
    return parse(in);
  }

  /// Built-in smooth schedule with delta falling 10 -> 0 GHz and escale
  /// rising 0.1 -> 8 GHz over s in [0,1]. The shape is synthetic: it stands
  /// in for a device schedule when none has been supplied, and is labeled
  /// as such in run manifests.
  static AnnealSchedule synthetic_default(int knots = 201) {
    if (knots < 2) throw ValidationError("synthetic schedule needs >= 2 knots");
    std::vector<ScheduleRow> rows(static_cast<std::size_t>(knots));
    for (int k = 0; k < knots; ++k) {
      double s = static_cast<double>(k) / (knots - 1);
      double ramp = 0.5 * (1.0 - std::cos(std::numbers::pi * s));  // 0 -> 1, smooth
      rows[static_cast<std::size_t>(k)] = {s, 10.0 * (1.0 - ramp), 0.1 + 7.9 * ramp};
    }
    return AnnealSchedule(std::move(rows));
  }

  double s_min() const { return rows_.front().s; }
  double s_max() const { return rows_.back().s; }
  const std::vector<ScheduleRow>& rows() const { return rows_; }

  double delta(double s) const { return interpolate(s, &ScheduleRow::delta_ghz); }
  double escale(double s) const { return interpolate(s, &ScheduleRow::escale_ghz); }

 private:
  static std::string trim(const std::string& str) {
    auto b = str.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = str.find_last_not_of(" \t\r\n");
    return str.substr(b, e - b + 1);
  }

  static std::string strip_spaces(const std::string& str) {
    std::string out;
    for (char c : str)
      if (c != ' ' && c != '\t') out.push_back(c);
    return out;
  }

  static ScheduleRow parse_row(const std::string& line, int lineno) {
    std::string cell;
    std::istringstream ss(line);
    double vals[3];
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(ss, cell, ','))
        throw ValidationError("schedule line " + std::to_string(lineno) +
                              ": expected 3 comma-separated values");
      try {
        std::size_t used = 0;
        vals[i] = std::stod(cell, &used);
        if (!trim(cell.substr(used)).empty()) throw std::invalid_argument("trailing junk");
      } catch (const std::exception&) {
        throw ValidationError("schedule line " + std::to_string(lineno) +
                              ": cannot parse number from '" + trim(cell) + "'");
      }
    }
    if (std::getline(ss, cell, ',') && !trim(cell).empty())
      throw ValidationError("schedule line " + std::to_string(lineno) + ": too many columns");
    return {vals[0], vals[1], vals[2]};
  }

  double interpolate(double s, double ScheduleRow::* field) const {
    if (!std::isfinite(s) || s < s_min() || s > s_max())
      throw ValidationError("schedule query s=" + std::to_string(s) + " outside tabulated range [" +
                            std::to_string(s_min()) + ", " + std::to_string(s_max()) + "]");
    auto it = std::upper_bound(rows_.begin(), rows_.end(), s,
                               [](double v, const ScheduleRow& r) { return v < r.s; });
    if (it == rows_.begin()) return rows_.front().*field;
    if (it == rows_.end()) return rows_.back().*field;
    const ScheduleRow& hi = *it;
    const ScheduleRow& lo = *(it - 1);
    double w = (s - lo.s) / (hi.s - lo.s);
    return (1.0 - w) * (lo.*field) + w * (hi.*field);
  }

  std::vector<ScheduleRow> rows_;
};

}  // namespace qaspect
