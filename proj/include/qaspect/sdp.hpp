#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qaspect/errors.hpp"

namespace qaspect {

/// Linear constraint lo <= <psi| rho |psi> <= hi on the optimization variable.
struct FidelityWindow {
  Eigen::VectorXcd psi;
  double lo = 0.0;
  double hi = 1.0;
};

struct SdpOptions {
  /// Relative duality-gap target for the interior-point loop.
  double gap_tol = 1e-9;
  double feas_tol = 1e-10;
  /// The loop also exits as optimal once the certified bound sits within
  /// this distance of the (feasible) primal value; this is the criterion
  /// that matters for pinned windows, whose dual optimum is not attained.
  double cert_gap_tol = 1e-8;
  int max_iterations = 100;
  /// Windows are widened by this amount internally so that pinned constraints
  /// (lo == hi) keep a strict interior. The certificate is always evaluated
  /// against the original windows, so the returned bound stays valid.
  double window_floor = 1e-9;
  /// Stop as soon as the certified bound is negative and the gap is below
  /// certified_gap_tol (used by the Monte-Carlo robustness sweep).
  bool stop_when_certified_negative = false;
  double certified_gap_tol = 1e-4;
};

enum class SdpStatus { optimal, infeasible, max_iterations };

struct SdpResiduals {
  /// Worst violation of the original windows by the returned primal point.
  double window_violation = 0.0;
  double trace_error = 0.0;
  double dual_infeasibility = 0.0;
  double min_eigenvalue_x = 0.0;
};

/// Result of maximizing Tr[W rho] over unit-trace PSD rho under fidelity
/// windows. `upper_bound` is certified by weak duality: for any multipliers
/// alpha, every feasible rho obeys
///   Tr[W rho] <= lambda_max(W - sum_i alpha_i P_i) + sum_i g_i(alpha_i),
/// with g_i(a) = a*hi for a >= 0 and a*lo otherwise, so the bound holds
/// independent of how well the interior-point iteration converged.
struct SdpResult {
  SdpStatus status = SdpStatus::max_iterations;
  double upper_bound = std::numeric_limits<double>::quiet_NaN();
  double primal_value = std::numeric_limits<double>::quiet_NaN();
  double duality_gap = std::numeric_limits<double>::quiet_NaN();
  /// Net dual multiplier per window plus the trace multiplier t.
  Eigen::VectorXd window_multipliers;
  double trace_multiplier = 0.0;
  SdpResiduals residuals;
  int iterations = 0;
  std::string message;
};

/// Columns spanning range(W) plus a bound on the spectral mass outside them,
/// for callers that know W's structure and want to skip the dense
/// eigendecomposition during presolve.
struct RangeHint {
  Eigen::MatrixXcd columns;
  double tail_norm = 0.0;
};

namespace sdp_detail {

struct BlockVec {
  Eigen::MatrixXcd h;  // Hermitian block
  Eigen::VectorXd s;   // nonnegative slack block
};

inline double inner(const BlockVec& a, const BlockVec& b) {
  return a.h.cwiseProduct(b.h.conjugate()).sum().real() + a.s.dot(b.s);
}

/// Constraint rows: row 0 is the trace; rows 1 + 2i and 2 + 2i are the lower
/// and upper bounds of window i with slack coefficients -1 and +1.
struct Problem {
  Eigen::MatrixXcd c;                  // objective on the Hermitian block (min form)
  std::vector<Eigen::VectorXcd> psis;  // reduced window states
  Eigen::VectorXd b;
  int k = 0;  // Hermitian dimension
  int q = 0;  // slack count
  int m = 0;  // constraint count

  int slack_of_row(int row) const { return row - 1; }  // rows 1..m-1 own slack row-1
  double slack_coeff(int row) const { return (row - 1) % 2 == 0 ? -1.0 : 1.0; }

  double apply_row(int row, const BlockVec& v) const {
    double out;
    if (row == 0)
      out = v.h.trace().real();
    else {
      const auto& psi = psis[static_cast<std::size_t>((row - 1) / 2)];
      out = (psi.adjoint() * v.h * psi)(0, 0).real();
      out += slack_coeff(row) * v.s[slack_of_row(row)];
    }
    return out;
  }

  Eigen::VectorXd apply(const BlockVec& v) const {
    Eigen::VectorXd out(m);
    for (int row = 0; row < m; ++row) out[row] = apply_row(row, v);
    return out;
  }

  BlockVec adjoint(const Eigen::VectorXd& y) const {
    BlockVec out{Eigen::MatrixXcd::Zero(k, k), Eigen::VectorXd::Zero(q)};
    out.h = y[0] * Eigen::MatrixXcd::Identity(k, k);
    for (std::size_t w = 0; w < psis.size(); ++w) {
      double net = y[1 + 2 * static_cast<int>(w)] + y[2 + 2 * static_cast<int>(w)];
      if (net != 0.0) out.h += net * (psis[w] * psis[w].adjoint());
    }
    for (int row = 1; row < m; ++row)
      out.s[slack_of_row(row)] += slack_coeff(row) * y[row];
    return out;
  }

  Eigen::MatrixXcd dense_row_matrix(int row) const {
    if (row == 0) return Eigen::MatrixXcd::Identity(k, k);
    const auto& psi = psis[static_cast<std::size_t>((row - 1) / 2)];
    return psi * psi.adjoint();
  }
};

/// Largest alpha with P + alpha*D >= 0, for P > 0.
inline double max_step_psd(const Eigen::MatrixXcd& p, const Eigen::MatrixXcd& d) {
  Eigen::LLT<Eigen::MatrixXcd> llt(p);
  if (llt.info() != Eigen::Success) return 0.0;
  Eigen::MatrixXcd l = llt.matrixL();
  Eigen::MatrixXcd s = l.triangularView<Eigen::Lower>().solve(d);
  s = l.triangularView<Eigen::Lower>().solve(s.adjoint()).adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (s + s.adjoint()),
                                                      Eigen::EigenvaluesOnly);
  double lmin = eig.eigenvalues().minCoeff();
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

inline double max_step_nonneg(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx[i] < 0.0) alpha = std::min(alpha, -x[i] / dx[i]);
  return alpha;
}

}  // namespace sdp_detail

/// Maximizes Tr[W rho] over rho >= 0, Tr rho = 1, subject to up to four
/// fidelity windows. Dense primal-dual interior point (HKM directions with
/// Mehrotra predictor-corrector) on the support subspace of W; see SdpResult
/// for the certification contract.
inline SdpResult maximize_with_fidelity_windows(const Eigen::MatrixXcd& w,
                                                std::vector<FidelityWindow> windows,
                                                const SdpOptions& opt = {},
                                                const std::optional<RangeHint>& hint = {}) {
  using sdp_detail::BlockVec;
  const auto dim = w.rows();
  if (w.cols() != dim) throw ValidationError("sdp: W must be square");
  if (windows.size() > 4) throw ValidationError("sdp: at most four fidelity windows supported");
  for (auto& win : windows) {
    if (win.psi.size() != dim) throw ValidationError("sdp: window state dimension mismatch");
    double norm = win.psi.norm();
    if (norm < 1e-12) throw ValidationError("sdp: window state has zero norm");
    win.psi /= norm;
    if (!(win.lo <= win.hi)) {
      SdpResult res;
      res.status = SdpStatus::infeasible;
      res.message = "window has lo > hi";
      return res;
    }
    win.lo = std::max(win.lo, 0.0);
    win.hi = std::min(win.hi, 1.0);
  }

  // Joint infeasibility certificate: orthonormal window states cannot carry
  // total fidelity above the trace.
  bool orthogonal = true;
  for (std::size_t a = 0; a + 1 < windows.size(); ++a)
    for (std::size_t b = a + 1; b < windows.size(); ++b)
      if (std::abs(windows[a].psi.dot(windows[b].psi)) > 1e-8) orthogonal = false;
  if (orthogonal && !windows.empty()) {
    double lo_sum = 0.0;
    for (const auto& win : windows) lo_sum += win.lo;
    if (lo_sum > 1.0 + 1e-12) {
      SdpResult res;
      res.status = SdpStatus::infeasible;
      res.message = "lower fidelity bounds sum to " + std::to_string(lo_sum) +
                    " > 1 = Tr rho; constraints are jointly infeasible";
      return res;
    }
  }

  // --- Exact-pin presolve --------------------------------------------------
  // A window with lo = 1 admits exactly one feasible state, the projector on
  // its window vector; the interior-point path does not exist there. The
  // optimum is evaluated directly and certified with a large finite
  // multiplier on the pinned window (error O(||W||^2 / M)).
  for (std::size_t pinned = 0; pinned < windows.size(); ++pinned) {
    if (windows[pinned].lo < 1.0 - 1e-12) continue;
    const Eigen::VectorXcd& psi = windows[pinned].psi;
    SdpResult res;
    for (std::size_t other = 0; other < windows.size(); ++other) {
      if (other == pinned) continue;
      double f = std::norm(windows[other].psi.dot(psi));
      if (f < windows[other].lo - 1e-9 || f > windows[other].hi + 1e-9) {
        res.status = SdpStatus::infeasible;
        res.message = "a pinned window forces a state outside another window";
        return res;
      }
    }
    res.status = SdpStatus::optimal;
    res.primal_value = (psi.adjoint() * w * psi)(0, 0).real();
    const double big = 1e8;
    Eigen::MatrixXcd shifted = w + big * (psi * psi.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(shifted, Eigen::EigenvaluesOnly);
    res.upper_bound = eig.eigenvalues().maxCoeff() - big * windows[pinned].lo;
    res.duality_gap = res.upper_bound - res.primal_value;
    res.window_multipliers = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(windows.size()));
    res.window_multipliers[static_cast<Eigen::Index>(pinned)] = -big;
    res.trace_multiplier = eig.eigenvalues().maxCoeff();
    res.message = "presolved: window pinned to a pure state";
    return res;
  }

  // --- Exact support reduction -------------------------------------------
  // W - sum alpha_i P_i is zero on the orthogonal complement of
  // span{range(W), psi_i}; keeping one spare direction from that complement
  // preserves the dual value, so the optimum of the reduced problem equals
  // the optimum of the full one.
  Eigen::MatrixXcd range_cols;
  double tail = 0.0;
  if (hint) {
    range_cols = hint->columns;
    tail = hint->tail_norm;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> weig(w);
    double scale = std::max(1.0, weig.eigenvalues().cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (std::abs(weig.eigenvalues()[i]) > 1e-13 * scale)
        keep.push_back(i);
      else
        tail += std::abs(weig.eigenvalues()[i]);
    }
    range_cols.resize(dim, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) range_cols.col(static_cast<Eigen::Index>(i)) = weig.eigenvectors().col(keep[i]);
  }

  // Window states go in first so they live in the span exactly; range columns
  // dropped as numerically dependent contribute only O(1e-10 ||W||), covered
  // by the tail cushion below.
  Eigen::MatrixXcd basis(dim, range_cols.cols() + static_cast<Eigen::Index>(windows.size()) + 1);
  Eigen::Index cols = 0;
  auto push_column = [&](const Eigen::VectorXcd& v) {
    Eigen::VectorXcd u = v;
    for (int pass = 0; pass < 2; ++pass)
      if (cols > 0) u -= basis.leftCols(cols) * (basis.leftCols(cols).adjoint() * u).eval();
    if (u.norm() > 1e-10) basis.col(cols++) = u / u.norm();
  };
  for (const auto& win : windows) push_column(win.psi);
  for (Eigen::Index i = 0; i < range_cols.cols(); ++i) push_column(range_cols.col(i));
  tail += 1e-9 * std::max(1.0, w.norm());
  if (cols < dim) {
    // One direction from the complement keeps lambda_max honest when the
    // reduced operator would otherwise be negative definite.
    for (Eigen::Index e = 0; e < dim && cols < basis.cols(); ++e) {
      Eigen::VectorXcd u = Eigen::VectorXcd::Zero(dim);
      u(e) = 1.0;
      u -= basis.leftCols(cols) * (basis.leftCols(cols).adjoint() * u).eval();
      if (u.norm() > 0.5) {
        basis.col(cols++) = u / u.norm();
        break;
      }
    }
  }
  bool reduced = cols < dim;
  Eigen::MatrixXcd b_basis = reduced ? Eigen::MatrixXcd(basis.leftCols(cols))
                                     : Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(dim, dim));
  int k = static_cast<int>(reduced ? cols : dim);

  sdp_detail::Problem prob;
  prob.k = k;
  prob.q = 2 * static_cast<int>(windows.size());
  prob.m = 1 + prob.q;
  Eigen::MatrixXcd w_red = b_basis.adjoint() * w * b_basis;
  w_red = 0.5 * (w_red + w_red.adjoint()).eval();
  prob.c = -w_red;  // interior point minimizes
  prob.b.resize(prob.m);
  prob.b[0] = 1.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    Eigen::VectorXcd psi_red = b_basis.adjoint() * windows[i].psi;
    double norm = psi_red.norm();
    if (norm < 1.0 - 1e-8)
      throw NumericalError("sdp: reduction lost a window state (norm " + std::to_string(norm) + ")");
    prob.psis.push_back(psi_red / norm);
    prob.b[1 + 2 * static_cast<int>(i)] = windows[i].lo - opt.window_floor;
    prob.b[2 + 2 * static_cast<int>(i)] = windows[i].hi + opt.window_floor;
  }

  // --- Interior-point state ----------------------------------------------
  const int kq = prob.k + prob.q;
  auto identity = Eigen::MatrixXcd::Identity(prob.k, prob.k);
  BlockVec x{Eigen::MatrixXcd(identity) / prob.k, Eigen::VectorXd::Constant(prob.q, 0.5)};
  Eigen::VectorXd y = Eigen::VectorXd::Zero(prob.m);
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ceig(prob.c, Eigen::EigenvaluesOnly);
    y[0] = ceig.eigenvalues().minCoeff() - 1.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      y[1 + 2 * static_cast<int>(i)] = 1.0;   // lower rows keep slack duals positive
      y[2 + 2 * static_cast<int>(i)] = -1.0;  // upper rows likewise
    }
  }
  BlockVec aty = prob.adjoint(y);
  BlockVec z{prob.c - aty.h, -aty.s};

  // Certified upper bound from the current dual point, evaluated against the
  // original windows; valid for any multipliers by weak duality.
  auto certified_bound = [&](const Eigen::VectorXd& mult) {
    Eigen::MatrixXcd shifted = w_red;
    for (std::size_t i = 0; i < windows.size(); ++i)
      shifted -= mult[static_cast<Eigen::Index>(i)] *
                 (prob.psis[i] * prob.psis[i].adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(shifted, Eigen::EigenvaluesOnly);
    double t = std::max(reduced ? 0.0 : -std::numeric_limits<double>::infinity(),
                        eig.eigenvalues().maxCoeff());
    double bound = t + tail;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      double a = mult[static_cast<Eigen::Index>(i)];
      bound += a >= 0.0 ? a * windows[i].hi : a * windows[i].lo;
    }
    return std::pair<double, double>(bound, t);
  };
  auto net_multipliers = [&](const Eigen::VectorXd& yy) {
    Eigen::VectorXd mult(static_cast<Eigen::Index>(windows.size()));
    for (std::size_t i = 0; i < windows.size(); ++i)
      mult[static_cast<Eigen::Index>(i)] =
          -(yy[1 + 2 * static_cast<int>(i)] + yy[2 + 2 * static_cast<int>(i)]);
    return mult;
  };

  SdpResult res;
  double mu = sdp_detail::inner(x, z) / kq;
  Eigen::VectorXd y_cert = y;  // last dual point with finite entries

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    if (!x.h.allFinite() || !z.h.allFinite() || !y.allFinite()) {
      res.message = "iterates lost finiteness";
      break;
    }
    y_cert = y;
    Eigen::VectorXd rp = prob.b - prob.apply(x);
    aty = prob.adjoint(y);
    BlockVec rd{prob.c - z.h - aty.h, -z.s - aty.s};
    mu = sdp_detail::inner(x, z) / kq;

    double pobj = -w_red.cwiseProduct(x.h.conjugate()).sum().real();
    double dobj = prob.b.dot(y);
    double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    double pinf = rp.lpNorm<Eigen::Infinity>() / (1.0 + prob.b.lpNorm<Eigen::Infinity>());
    double dinf = std::sqrt(sdp_detail::inner(rd, rd)) / (1.0 + prob.c.norm());
    res.residuals.dual_infeasibility = dinf;

    bool converged = rel_gap <= opt.gap_tol && pinf <= opt.feas_tol && dinf <= 1e-7;
    bool cert_ok = false;
    bool early = false;
    if (res.iterations > 0) {
      auto [bound, t] = certified_bound(net_multipliers(y));
      double primal_max = -pobj;
      double cert_gap = bound - primal_max;
      cert_ok = pinf <= 1e-8 &&
                cert_gap <= std::max(opt.cert_gap_tol, opt.cert_gap_tol * std::abs(bound));
      if (opt.stop_when_certified_negative)
        early = bound < 0.0 && std::abs(cert_gap) <= opt.certified_gap_tol && pinf <= 1e-7;
    }
    if (converged || cert_ok || early) {
      res.status = SdpStatus::optimal;
      break;
    }

    // Factor Z and form G = Z^-1.
    Eigen::LLT<Eigen::MatrixXcd> zllt(z.h);
    if (zllt.info() != Eigen::Success) {
      res.message = "dual block lost positive definiteness";
      break;
    }
    Eigen::MatrixXcd g = zllt.solve(identity);

    auto solve_direction = [&](const Eigen::MatrixXcd& rc_h, const Eigen::VectorXd& rc_s,
                               BlockVec& dx, Eigen::VectorXd& dy, BlockVec& dz) {
      // M dy = b + A(X Rd G) - A(Rc G) over both blocks.
      Eigen::MatrixXd m(prob.m, prob.m);
      std::vector<Eigen::MatrixXcd> xag(static_cast<std::size_t>(prob.m));
      for (int col = 0; col < prob.m; ++col)
        xag[static_cast<std::size_t>(col)] = x.h * prob.dense_row_matrix(col) * g;
      for (int row = 0; row < prob.m; ++row) {
        Eigen::MatrixXcd arow = prob.dense_row_matrix(row);
        for (int col = 0; col < prob.m; ++col) {
          double v = arow.cwiseProduct(xag[static_cast<std::size_t>(col)].transpose())
                         .sum()
                         .real();
          // Slack contribution: rows past 0 own one slack each.
          if (row == col && row > 0) {
            int j = prob.slack_of_row(row);
            v += x.s[j] / z.s[j];
          }
          m(row, col) = v;
        }
      }
      Eigen::VectorXd rhs = prob.b;
      BlockVec xrdg{x.h * rd.h * g, Eigen::VectorXd(prob.q)};
      for (int j = 0; j < prob.q; ++j) xrdg.s[j] = x.s[j] * rd.s[j] / z.s[j];
      rhs += prob.apply(xrdg);
      BlockVec rcg{rc_h * g, Eigen::VectorXd(prob.q)};
      for (int j = 0; j < prob.q; ++j) rcg.s[j] = rc_s[j] / z.s[j];
      rhs -= prob.apply(rcg);

      dy = m.partialPivLu().solve(rhs);
      BlockVec atdy = prob.adjoint(dy);
      dz.h = rd.h - atdy.h;
      dz.s = rd.s - atdy.s;
      dx.h = rcg.h - x.h - x.h * dz.h * g;
      dx.h = 0.5 * (dx.h + dx.h.adjoint()).eval();
      dx.s.resize(prob.q);
      for (int j = 0; j < prob.q; ++j)
        dx.s[j] = (rc_s[j] - x.s[j] * z.s[j] - x.s[j] * dz.s[j]) / z.s[j];
    };

    // Predictor.
    BlockVec dx_aff, dz_aff;
    Eigen::VectorXd dy_aff;
    solve_direction(Eigen::MatrixXcd::Zero(prob.k, prob.k), Eigen::VectorXd::Zero(prob.q),
                    dx_aff, dy_aff, dz_aff);
    double ap_aff = std::min(1.0, sdp_detail::max_step_psd(x.h, dx_aff.h));
    ap_aff = std::min(ap_aff, sdp_detail::max_step_nonneg(x.s, dx_aff.s));
    double ad_aff = std::min(1.0, sdp_detail::max_step_psd(z.h, dz_aff.h));
    ad_aff = std::min(ad_aff, sdp_detail::max_step_nonneg(z.s, dz_aff.s));
    BlockVec x_trial{x.h + ap_aff * dx_aff.h, x.s + ap_aff * dx_aff.s};
    BlockVec z_trial{z.h + ad_aff * dz_aff.h, z.s + ad_aff * dz_aff.s};
    double mu_aff = sdp_detail::inner(x_trial, z_trial) / kq;
    double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-10, 1.0);

    // Corrector.
    Eigen::MatrixXcd rc_h = sigma * mu * identity - dx_aff.h * dz_aff.h;
    Eigen::VectorXd rc_s(prob.q);
    for (int j = 0; j < prob.q; ++j) rc_s[j] = sigma * mu - dx_aff.s[j] * dz_aff.s[j];
    BlockVec dx, dz;
    Eigen::VectorXd dy;
    solve_direction(rc_h, rc_s, dx, dy, dz);

    const double tau = 0.98;
    double ap = std::min(1.0, tau * sdp_detail::max_step_psd(x.h, dx.h));
    ap = std::min(ap, tau * sdp_detail::max_step_nonneg(x.s, dx.s));
    double ad = std::min(1.0, tau * sdp_detail::max_step_psd(z.h, dz.h));
    ad = std::min(ad, tau * sdp_detail::max_step_nonneg(z.s, dz.s));
    if (ap < 1e-9 && ad < 1e-9) {
      res.message = "step lengths collapsed";
      break;
    }
    x.h += ap * dx.h;
    x.s += ap * dx.s;
    y += ad * dy;
    z.h += ad * dz.h;
    z.s += ad * dz.s;
  }

  // --- Certification against the original data ---------------------------
  res.window_multipliers = net_multipliers(y.allFinite() ? y : y_cert);
  auto [bound, t] = certified_bound(res.window_multipliers);
  res.trace_multiplier = t;
  res.upper_bound = bound;
  res.primal_value = w_red.cwiseProduct(x.h.conjugate()).sum().real();
  res.duality_gap = res.upper_bound - res.primal_value;

  res.residuals.trace_error = std::abs(x.h.trace().real() - 1.0);
  double violation = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    double f = (prob.psis[i].adjoint() * x.h * prob.psis[i])(0, 0).real();
    violation = std::max({violation, windows[i].lo - f, f - windows[i].hi});
  }
  res.residuals.window_violation = std::max(0.0, violation);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> xeig(x.h, Eigen::EigenvaluesOnly);
  res.residuals.min_eigenvalue_x = xeig.eigenvalues().minCoeff();

  if (res.status != SdpStatus::optimal && res.message.empty())
    res.message = "iteration limit reached";
  if (res.status == SdpStatus::optimal && res.message.empty()) res.message = "optimal";
  return res;
}

}  // namespace qaspect
