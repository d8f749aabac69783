#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qaspect/constants.hpp"
#include "qaspect/errors.hpp"

namespace qaspect {

/// A split of an n-qubit register into nonempty complementary subsets A and B.
/// Canonical form keeps qubit 0 in A, which deduplicates mirror pairs. The
/// bitmask uses bit q for qubit q (independent of the basis-index convention).
class Bipartition {
 public:
  Bipartition(std::uint32_t mask_a, int n) : n_(n) {
    if (n < 2 || n > max_qubits) throw ValidationError("bipartition needs 2 <= n <= 12");
    std::uint32_t full = (std::uint32_t{1} << n) - 1;
    if ((mask_a & ~full) != 0) throw ValidationError("bipartition mask exceeds register");
    if ((mask_a & 1u) == 0) mask_a = full & ~mask_a;  // canonicalize: qubit 0 in A
    if (mask_a == 0 || mask_a == full)
      throw ValidationError("bipartition subsets must be nonempty and proper");
    mask_a_ = mask_a;
  }

  int n() const { return n_; }
  std::uint32_t mask_a() const { return mask_a_; }
  std::uint32_t mask_b() const { return ((std::uint32_t{1} << n_) - 1) & ~mask_a_; }
  bool in_a(int q) const { return (mask_a_ >> q) & 1u; }
  int size_a() const { return popcount(mask_a_); }
  int size_b() const { return n_ - size_a(); }

  /// Stable identifier used in output tables: subset A as a bitmask.
  std::uint32_t id() const { return mask_a_; }

  /// Mask over basis-index bits for subsystem A (qubit 0 = MSB convention).
  std::size_t state_mask_a() const {
    std::size_t m = 0;
    for (int q = 0; q < n_; ++q)
      if (in_a(q)) m |= std::size_t{1} << (n_ - 1 - q);
    return m;
  }

  bool operator==(const Bipartition& other) const {
    return n_ == other.n_ && mask_a_ == other.mask_a_;
  }

 private:
  static int popcount(std::uint32_t v) {
    int c = 0;
    for (; v; v &= v - 1) ++c;
    return c;
  }

  int n_;
  std::uint32_t mask_a_ = 0;
};

/// All 2^(n-1) - 1 canonical bipartitions of n qubits.
inline std::vector<Bipartition> enumerate_bipartitions(int n) {
  if (n < 2 || n > max_qubits) throw ValidationError("enumerate_bipartitions needs 2 <= n <= 12");
  std::vector<Bipartition> parts;
  std::uint32_t full = (std::uint32_t{1} << n) - 1;
  for (std::uint32_t mask = 1; mask < full; mask += 2)  // bit 0 always set
    parts.emplace_back(mask, n);
  return parts;
}

}  // namespace qaspect
