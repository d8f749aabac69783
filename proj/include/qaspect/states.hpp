#pragma once

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "qaspect/bipartition.hpp"
#include "qaspect/errors.hpp"

namespace qaspect {

/// (|up up> + |down down>)/sqrt(2) on two qubits.
inline Eigen::VectorXcd bell_plus() {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

/// (|up...up> + |down...down>)/sqrt(2) on n qubits.
inline Eigen::VectorXcd ghz_state(int n) {
  std::size_t dim = std::size_t{1} << n;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  v(0) = v(static_cast<Eigen::Index>(dim - 1)) = 1.0 / std::sqrt(2.0);
  return v;
}

/// Haar-random unit vector.
inline Eigen::VectorXcd random_state(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(gauss(rng), gauss(rng));
  v.normalize();
  return v;
}

/// Random rank-r density matrix (uniform mixture weights from a flat simplex draw).
inline Eigen::MatrixXcd random_density_matrix(Eigen::Index dim, int rank, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  double total = 0.0;
  std::vector<double> w(static_cast<std::size_t>(rank));
  for (auto& x : w) {
    x = -std::log(uni(rng) + 1e-300);
    total += x;
  }
  for (int k = 0; k < rank; ++k) {
    Eigen::VectorXcd psi = random_state(dim, rng);
    rho += (w[static_cast<std::size_t>(k)] / total) * (psi * psi.adjoint());
  }
  return rho;
}

/// Embeds |a> on subsystem A and |b> on subsystem B into the full register:
/// full(x) = a(x_A) * b(x_B), with subsystem indices read off in ascending
/// qubit order (first listed qubit most significant).
inline Eigen::VectorXcd embed_product(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b,
                                      const Bipartition& part) {
  int n = part.n();
  std::size_t dim = std::size_t{1} << n;
  if (a.size() != (Eigen::Index{1} << part.size_a()) ||
      b.size() != (Eigen::Index{1} << part.size_b()))
    throw ValidationError("embed_product: factor dimensions do not match the cut");
  Eigen::VectorXcd full(static_cast<Eigen::Index>(dim));
  for (std::size_t x = 0; x < dim; ++x) {
    std::size_t ia = 0, ib = 0;
    for (int q = 0; q < n; ++q) {
      std::size_t bit = (x >> (n - 1 - q)) & 1u;
      if (part.in_a(q))
        ia = (ia << 1) | bit;
      else
        ib = (ib << 1) | bit;
    }
    full(static_cast<Eigen::Index>(x)) =
        a(static_cast<Eigen::Index>(ia)) * b(static_cast<Eigen::Index>(ib));
  }
  return full;
}

/// Schmidt decomposition of a pure state across a cut:
/// psi = sum_k values[k] * |a_k> (x) |b_k>, values descending.
struct SchmidtDecomposition {
  Eigen::VectorXd values;
  Eigen::MatrixXcd a_states;  // columns, dim 2^|A|
  Eigen::MatrixXcd b_states;  // columns, dim 2^|B|
};

inline SchmidtDecomposition schmidt_decompose(const Eigen::VectorXcd& psi,
                                              const Bipartition& part) {
  int n = part.n();
  std::size_t dim = std::size_t{1} << n;
  if (psi.size() != static_cast<Eigen::Index>(dim))
    throw ValidationError("schmidt_decompose: state dimension does not match cut");
  Eigen::Index da = Eigen::Index{1} << part.size_a();
  Eigen::Index db = Eigen::Index{1} << part.size_b();
  Eigen::MatrixXcd m(da, db);
  for (std::size_t x = 0; x < dim; ++x) {
    std::size_t ia = 0, ib = 0;
    for (int q = 0; q < n; ++q) {
      std::size_t bit = (x >> (n - 1 - q)) & 1u;
      if (part.in_a(q))
        ia = (ia << 1) | bit;
      else
        ib = (ib << 1) | bit;
    }
    m(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib)) =
        psi(static_cast<Eigen::Index>(x));
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.singularValues(), svd.matrixU(), svd.matrixV().conjugate()};
}

}  // namespace qaspect
