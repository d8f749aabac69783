#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qaspect/constants.hpp"
#include "qaspect/errors.hpp"

namespace qaspect {

/// Compact reproducible number formatting shared by every table writer.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Plot-ready delimited text: '#'-prefixed metadata lines, one header line,
/// then comma-separated rows.
class TableWriter {
 public:
  explicit TableWriter(std::ostream& os) : os_(os) {}

  void meta(const std::string& key, const std::string& value) {
    os_ << "# " << key << ": " << value << "\n";
  }
  void meta(const std::string& key, double value) { meta(key, format_number(value)); }

  void columns(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) os_ << (i ? "," : "") << names[i];
    os_ << "\n";
    width_ = names.size();
  }

  void row(const std::vector<double>& values) {
    if (width_ && values.size() != width_)
      throw ValidationError("table row width does not match the header");
    for (std::size_t i = 0; i < values.size(); ++i)
      os_ << (i ? "," : "") << format_number(values[i]);
    os_ << "\n";
  }

 private:
  std::ostream& os_;
  std::size_t width_ = 0;
};

/// In-memory table that can be emitted as delimited text or mirrored as JSON.
struct Table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> column_names;
  std::vector<std::vector<double>> rows;

  void meta(const std::string& key, const std::string& value) { metadata.push_back({key, value}); }
  void meta(const std::string& key, double value) { metadata.push_back({key, format_number(value)}); }

  void write_csv(std::ostream& os) const {
    TableWriter w(os);
    for (const auto& [k, v] : metadata) w.meta(k, v);
    w.columns(column_names);
    for (const auto& r : rows) w.row(r);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (const auto& [k, v] : metadata) j["metadata"][k] = v;
    j["columns"] = column_names;
    auto arr = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json row;
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (std::isnan(r[c]))
          row[column_names[c]] = nullptr;
        else
          row[column_names[c]] = r[c];
      }
      arr.push_back(row);
    }
    j["rows"] = arr;
    return j;
  }
};

inline void write_table(const Table& table, const std::string& path, const std::string& format) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file: " + path);
  if (format == "csv") {
    table.write_csv(out);
  } else if (format == "json") {
    out << table.to_json().dump(2) << "\n";
  } else {
    throw ValidationError("unknown output format '" + format + "' (use csv or json)");
  }
  if (!out.good()) throw ValidationError("failed writing output file: " + path);
}

/// Every run writes <output>.manifest.json with the full configuration needed
/// to reproduce the result, including inlined input data.
inline void write_manifest(const std::string& output_path, const nlohmann::json& config) {
  nlohmann::json manifest = config;
  manifest["tool"] = "qaspect";
  manifest["version"] = QASPECT_VERSION;
  std::string path = output_path + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open manifest file: " + path);
  out << manifest.dump(2) << "\n";
}

}  // namespace qaspect
