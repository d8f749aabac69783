#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qaspect/constants.hpp"
#include "qaspect/errors.hpp"

namespace qaspect {

/// A single Ising coupling J_ij, stored canonically with i < j.
struct Coupling {
  int i = 0;
  int j = 0;
  double value = 0.0;
};

/// Dimensionless problem Hamiltonian data: biases h_i and symmetric
/// couplings J_ij. Immutable once constructed.
class ProblemInstance {
 public:
  ProblemInstance(int n, std::vector<double> h, std::vector<Coupling> couplings)
      : n_(n), h_(std::move(h)), couplings_(std::move(couplings)) {
    if (n_ < 1 || n_ > max_qubits)
      throw ValidationError("qubit count must be in [1, " + std::to_string(max_qubits) +
                            "], got " + std::to_string(n_));
    if (static_cast<int>(h_.size()) != n_)
      throw ValidationError("bias vector length " + std::to_string(h_.size()) +
                            " does not match n=" + std::to_string(n_));
    for (double b : h_)
      if (!std::isfinite(b)) throw ValidationError("non-finite bias value");
    for (auto& c : couplings_) {
      if (c.i == c.j)
        throw ValidationError("self-coupling (" + std::to_string(c.i) + "," +
                              std::to_string(c.j) + ") is not allowed");
      if (c.i > c.j) std::swap(c.i, c.j);
      if (c.i < 0 || c.j >= n_)
        throw ValidationError("coupling index out of range: (" + std::to_string(c.i) + "," +
                              std::to_string(c.j) + ")");
      if (!std::isfinite(c.value)) throw ValidationError("non-finite coupling value");
    }
    std::sort(couplings_.begin(), couplings_.end(), [](const Coupling& a, const Coupling& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t k = 1; k < couplings_.size(); ++k)
      if (couplings_[k].i == couplings_[k - 1].i && couplings_[k].j == couplings_[k - 1].j)
        throw ValidationError("duplicate coupling (" + std::to_string(couplings_[k].i) + "," +
                              std::to_string(couplings_[k].j) + ")");
  }

  /// Named presets: "fm2" is the ferromagnetic pair (J01 = -2.5), "fm8" the
  /// eight-qubit ferromagnetic ring with J = -2.5 on every ring edge.
  static ProblemInstance preset(std::string_view name) {
    if (name == "fm2") return ProblemInstance(2, {0.0, 0.0}, {{0, 1, -2.5}});
    if (name == "fm8") {
      std::vector<Coupling> ring;
      for (int q = 0; q < 8; ++q) ring.push_back({q, (q + 1) % 8, -2.5});
      return ProblemInstance(8, std::vector<double>(8, 0.0), std::move(ring));
    }
    throw ValidationError("unknown preset '" + std::string(name) + "' (known: fm2, fm8)");
  }

  /// Parses the JSON instance format:
  ///   { "n": 2, "h": [0, 0], "j": [[0, 1, -2.5]] }
  static ProblemInstance from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("instance JSON parse error: ") + e.what());
    }
    try {
      int n = j.at("n").get<int>();
      std::vector<double> h = j.at("h").get<std::vector<double>>();
      std::vector<Coupling> couplings;
      if (j.contains("j")) {
        for (const auto& entry : j.at("j")) {
          if (!entry.is_array() || entry.size() != 3)
            throw ValidationError("instance coupling entries must be [i, j, value] triples");
          couplings.push_back({entry[0].get<int>(), entry[1].get<int>(), entry[2].get<double>()});
        }
      }
      return ProblemInstance(n, std::move(h), std::move(couplings));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("instance JSON is missing or mistypes a field: ") + e.what());
    }
  }

  static ProblemInstance from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open instance file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["n"] = n_;
    j["h"] = h_;
    auto arr = nlohmann::json::array();
    for (const auto& c : couplings_) arr.push_back({c.i, c.j, c.value});
    j["j"] = arr;
    return j;
  }

  int n() const { return n_; }
  const std::vector<double>& h() const { return h_; }
  const std::vector<Coupling>& couplings() const { return couplings_; }

  /// J_ij by index pair (order-insensitive); zero when the pair is uncoupled.
  double coupling(int i, int j) const {
    if (i > j) std::swap(i, j);
    for (const auto& c : couplings_)
      if (c.i == i && c.j == j) return c.value;
    return 0.0;
  }

  /// Copy with every bias replaced by a uniform value (diagnostic bias sweeps).
  ProblemInstance with_uniform_h(double h) const {
    return ProblemInstance(n_, std::vector<double>(static_cast<std::size_t>(n_), h), couplings_);
  }

  /// Copy with bias h_q on one qubit only (susceptibility probes).
  ProblemInstance with_bias(int qubit, double h) const {
    if (qubit < 0 || qubit >= n_) throw ValidationError("bias qubit index out of range");
    std::vector<double> biases = h_;
    biases[static_cast<std::size_t>(qubit)] = h;
    return ProblemInstance(n_, std::move(biases), couplings_);
  }

  /// Copy with couplings multiplied by per-coupling factors (perturbation studies).
  ProblemInstance with_scaled_couplings(const std::vector<double>& factors) const {
    if (factors.size() != couplings_.size())
      throw ValidationError("coupling factor count does not match coupling count");
    std::vector<Coupling> scaled = couplings_;
    for (std::size_t k = 0; k < scaled.size(); ++k) scaled[k].value *= factors[k];
    return ProblemInstance(n_, h_, std::move(scaled));
  }

 private:
  int n_;
  std::vector<double> h_;
  std::vector<Coupling> couplings_;
};

}  // namespace qaspect
