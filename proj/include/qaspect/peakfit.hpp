#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qaspect/errors.hpp"

namespace qaspect {

/// One fitted Gaussian component A * exp(-(x - center)^2 / (2 sigma^2)).
struct GaussianPeak {
  double amplitude = 0.0;
  double center = 0.0;
  double sigma = 0.0;
  double amplitude_err = 0.0;
  double center_err = 0.0;
  double sigma_err = 0.0;
};

struct MultiGaussFit {
  std::vector<GaussianPeak> peaks;  // sorted by center, ascending
  bool converged = false;
  double residual_norm = 0.0;
  int iterations = 0;
};

namespace detail {

inline void eval_multi_gauss(const Eigen::VectorXd& p, std::span<const double> x,
                             Eigen::VectorXd& model, Eigen::MatrixXd* jac) {
  auto m = static_cast<Eigen::Index>(x.size());
  int peaks = static_cast<int>(p.size() / 3);
  model.setZero(m);
  if (jac) jac->setZero(m, p.size());
  for (int k = 0; k < peaks; ++k) {
    double amp = p[3 * k], c = p[3 * k + 1], sig = p[3 * k + 2];
    double s2 = sig * sig;
    for (Eigen::Index i = 0; i < m; ++i) {
      double dx = x[static_cast<std::size_t>(i)] - c;
      double e = std::exp(-0.5 * dx * dx / s2);
      model[i] += amp * e;
      if (jac) {
        (*jac)(i, 3 * k) = e;
        (*jac)(i, 3 * k + 1) = amp * e * dx / s2;
        (*jac)(i, 3 * k + 2) = amp * e * dx * dx / (s2 * sig);
      }
    }
  }
}

/// Initial guesses: the `count` tallest interior local maxima; when the data
/// exposes fewer maxima (overlapping peaks), extra components are seeded at
/// small offsets from the tallest one.
inline Eigen::VectorXd initial_guess(std::span<const double> x, std::span<const double> y,
                                     int count, double width_hint) {
  std::vector<std::pair<double, std::size_t>> maxima;
  for (std::size_t i = 1; i + 1 < y.size(); ++i)
    if (y[i] >= y[i - 1] && y[i] > y[i + 1]) maxima.push_back({y[i], i});
  std::sort(maxima.begin(), maxima.end(), [](auto& a, auto& b) { return a.first > b.first; });
  Eigen::VectorXd p(3 * count);
  for (int k = 0; k < count; ++k) {
    if (k < static_cast<int>(maxima.size())) {
      std::size_t i = maxima[static_cast<std::size_t>(k)].second;
      p[3 * k] = y[i];
      p[3 * k + 1] = x[i];
      p[3 * k + 2] = width_hint;
    } else {
      std::size_t i = maxima.empty() ? y.size() / 2 : maxima[0].second;
      p[3 * k] = 0.5 * y[i];
      p[3 * k + 1] = x[i] + (k % 2 ? 1.0 : -1.0) * width_hint * (1 + k / 2);
      p[3 * k + 2] = width_hint;
    }
  }
  return p;
}

}  // namespace detail

/// Nonlinear least-squares fit of `count` Gaussian components by
/// Levenberg-Marquardt. Parameter uncertainties come from the covariance
/// (J^T J)^-1 scaled by the residual variance at the optimum.
inline MultiGaussFit fit_multi_gaussian(std::span<const double> x, std::span<const double> y,
                                        int count, double width_hint) {
  if (count < 1) throw ValidationError("fit_multi_gaussian: need at least one peak");
  if (x.size() != y.size() || x.size() < 3 * static_cast<std::size_t>(count) + 1)
    throw ValidationError("fit_multi_gaussian: not enough samples for the requested peak count");
  if (!(width_hint > 0.0)) throw ValidationError("fit_multi_gaussian: width hint must be > 0");

  auto m = static_cast<Eigen::Index>(x.size());
  Eigen::VectorXd yv(m);
  for (Eigen::Index i = 0; i < m; ++i) yv[i] = y[static_cast<std::size_t>(i)];

  Eigen::VectorXd p = detail::initial_guess(x, y, count, width_hint);
  Eigen::VectorXd model(m);
  Eigen::MatrixXd jac(m, p.size());

  detail::eval_multi_gauss(p, x, model, &jac);
  double cost = (yv - model).squaredNorm();
  double lambda = 1e-3;
  MultiGaussFit out;
  const int max_iterations = 300;

  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    Eigen::VectorXd r = yv - model;
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd jtr = jac.transpose() * r;
    // A stationary point of the residual (possibly with nonzero cost when the
    // data holds more structure than the model) counts as converged.
    if (jtr.lpNorm<Eigen::Infinity>() < 1e-9 * (1.0 + cost)) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    Eigen::VectorXd step = damped.ldlt().solve(jtr);
    Eigen::VectorXd trial = p + step;
    for (int k = 0; k < count; ++k) trial[3 * k + 2] = std::abs(trial[3 * k + 2]);
    Eigen::VectorXd trial_model(m);
    detail::eval_multi_gauss(trial, x, trial_model, nullptr);
    double trial_cost = (yv - trial_model).squaredNorm();
    if (trial_cost < cost) {
      double improvement = cost - trial_cost;
      p = trial;
      detail::eval_multi_gauss(p, x, model, &jac);
      cost = trial_cost;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (improvement < 1e-12 * (1.0 + cost)) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e10) {
        // Damping exhausted: accept the point if the gradient has flattened.
        out.converged = jtr.lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + cost);
        break;
      }
    }
  }

  out.residual_norm = std::sqrt(cost);

  // Covariance of the parameters at the optimum.
  Eigen::MatrixXd jtj = jac.transpose() * jac;
  double dof = static_cast<double>(m) - static_cast<double>(p.size());
  double s2 = dof > 0 ? cost / dof : 0.0;
  Eigen::MatrixXd cov = jtj.ldlt().solve(Eigen::MatrixXd::Identity(p.size(), p.size())) * s2;

  out.peaks.resize(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    GaussianPeak& peak = out.peaks[static_cast<std::size_t>(k)];
    peak.amplitude = p[3 * k];
    peak.center = p[3 * k + 1];
    peak.sigma = std::abs(p[3 * k + 2]);
    peak.amplitude_err = std::sqrt(std::max(0.0, cov(3 * k, 3 * k)));
    peak.center_err = std::sqrt(std::max(0.0, cov(3 * k + 1, 3 * k + 1)));
    peak.sigma_err = std::sqrt(std::max(0.0, cov(3 * k + 2, 3 * k + 2)));
  }
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const GaussianPeak& a, const GaussianPeak& b) { return a.center < b.center; });
  return out;
}

}  // namespace qaspect
