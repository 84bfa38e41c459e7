#pragma once

// Strong stationary duals of Moebius monotone chains.
//
// down: link Lambda(e_j, e_i) = 1{e_i <= e_j} pi(e_i) / H(e_j), H = pi C,
//       nu* = g (C^T)^{-1} diag(H),  P* = diag(H)^{-1} (C^{-1} Prev C)^T diag(H),
//       absorbing at the unique maximal state.
// up:   link Lambda(e_j, e_i) = 1{e_i >= e_j} pi(e_i) / Hbar(e_j), Hbar = pi C^T,
//       nu* = g C^{-1} diag(Hbar), P* = diag(Hbar)^{-1} ((C^T)^{-1} Prev C^T)^T diag(Hbar),
//       absorbing at the unique minimal state.
// Here g = nu / pi and Prev is the time reversal of P.

#include "mobius/chain.hpp"
#include "mobius/core.hpp"
#include "mobius/monotonicity.hpp"
#include "mobius/poset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mobius {

struct Link {
  Matrix Lambda;
  RowVector H;  // S_down pi (down) or S_up pi (up)
  Direction direction = Direction::down;
};

struct DualityResiduals {
  double nu = 0.0;            // || nu - nu* Lambda ||_inf
  double intertwining = 0.0;  // || Lambda P - P* Lambda ||_inf
  double row_sum = 0.0;       // max |row sum of P* - 1|
  double min_nu_star = 0.0;
  double min_p_star = 0.0;
};

struct DualChain {
  RowVector nu_star;
  Matrix P_star;
  std::size_t absorbing_index = 0;
  Direction direction = Direction::down;
  Link link;
  DualityResiduals residuals;
  // Entries in (-identity tol, 0) clamped to zero after construction.
  std::size_t clamped_entries = 0;
  double max_clamp = 0.0;
  // True when preconditions failed and the raw signed matrices were kept.
  bool forced = false;
  std::vector<MonotonicityReport> preconditions;
};

struct DualOptions {
  MonotonicityOptions monotonicity;
  Tolerances tolerances;
  bool force = false;
};

inline Link build_link(const StationaryLaw& law, const ZetaMobius& zm, Direction dir) {
  const std::size_t m = zm.size();
  require_size(static_cast<std::size_t>(law.pi.size()), m, "build_link");
  Link L;
  L.direction = dir;
  L.H = dir == Direction::down ? sum_down(law.pi, zm) : sum_up(law.pi, zm);
  const auto n = static_cast<Eigen::Index>(m);
  L.Lambda = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      bool related = dir == Direction::down ? zm.zeta(i, j) != 0 : zm.zeta(j, i) != 0;
      if (related) L.Lambda(j, i) = law.pi(i) / L.H(j);
    }
  return L;
}

inline DualityResiduals verify_duality(const Link& link, const Chain& original,
                                       const DualChain& dual) {
  DualityResiduals r;
  if (original.nu) r.nu = (*original.nu - dual.nu_star * link.Lambda).cwiseAbs().maxCoeff();
  r.intertwining = (link.Lambda * original.P - dual.P_star * link.Lambda).cwiseAbs().maxCoeff();
  r.row_sum = (dual.P_star.rowwise().sum().array() - 1.0).abs().maxCoeff();
  r.min_nu_star = dual.nu_star.minCoeff();
  r.min_p_star = dual.P_star.minCoeff();
  return r;
}

namespace detail {

inline std::size_t unique_extremal(const Poset& p, Direction dir) {
  auto ext = dir == Direction::down ? p.maximal_elements() : p.minimal_elements();
  if (ext.size() != 1)
    throw Error(ErrorKind::NoUniqueExtremalState,
                std::string("the ") + (dir == Direction::down ? "down" : "up") +
                    " dual needs a unique " + (dir == Direction::down ? "maximal" : "minimal") +
                    " state; found " + std::to_string(ext.size()),
                {{"count", std::to_string(ext.size())}});
  return ext.front();
}

// Zero out (-tol, 0) noise and renormalize the rows it touched.
inline void clamp_noise(RowVector& v, double tol, std::size_t& count, double& max_clamp) {
  bool touched = false;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v(i) < 0.0 && v(i) > -tol) {
      max_clamp = std::max(max_clamp, -v(i));
      v(i) = 0.0;
      ++count;
      touched = true;
    }
  if (touched) v /= v.sum();
}

}  // namespace detail

/// Strong stationary dual of Theorem-1 type (down) or its mirror (up).
/// Preconditions are checked first; unless `opts.force` is set a failure
/// throws PreconditionError carrying the offending reports.
inline DualChain build_ssd(const Chain& c, const StationaryLaw& law, const ZetaMobius& zm,
                           Direction dir, const DualOptions& opts = {}) {
  if (!c.nu) throw Error(ErrorKind::InvalidArgument, "build_ssd needs an initial law");
  const std::size_t m = c.size();
  require_size(zm.size(), m, "build_ssd");
  const std::size_t absorbing = detail::unique_extremal(c.poset, dir);

  RowVector g = c.nu->cwiseQuotient(law.pi);
  Chain rev = reverse(c, law, opts.tolerances);
  auto g_report = function_mobius_monotone(g, zm, dir, opts.monotonicity);
  auto k_report =
      mobius_monotone(rev.P, zm, dir, opts.monotonicity, rev.exact ? &*rev.exact : nullptr);

  DualChain d;
  d.direction = dir;
  d.absorbing_index = absorbing;
  d.preconditions = {g_report, k_report};
  if (!g_report.verdict || !k_report.verdict) {
    if (!opts.force) {
      std::string what = !g_report.verdict ? "g = nu/pi is not " : "the reversed kernel is not ";
      throw PreconditionError(what + to_string(dir) + "-Moebius monotone (worst " +
                                  format_real(!g_report.verdict ? g_report.worst_value
                                                                : k_report.worst_value) +
                                  ")",
                              d.preconditions);
    }
    d.forced = true;
  }

  d.link = build_link(law, zm, dir);
  const RowVector& H = d.link.H;
  const Matrix& K = *k_report.transformed;
  const auto n = static_cast<Eigen::Index>(m);
  d.P_star = H.cwiseInverse().asDiagonal() * K.transpose() * H.asDiagonal();
  RowVector h = *g_report.transformed_vector;  // D_up g (down) or D_down g (up)
  d.nu_star = h.cwiseProduct(H);

  // Summation form of nu*, evaluated independently of the matrix route.
  RowVector nu_sum = RowVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index e = 0; e < n; ++e) {
      if (dir == Direction::down && c.poset.leq(i, e)) acc += zm.mobius(i, e) * g(e);
      if (dir == Direction::up && c.poset.leq(e, i)) acc += g(e) * zm.mobius(e, i);
    }
    nu_sum(i) = H(i) * acc;
  }
  double disagreement = (nu_sum - d.nu_star).cwiseAbs().maxCoeff();
  if (disagreement > opts.tolerances.identity)
    throw Error(ErrorKind::NumericalFailure,
                "matrix and summation forms of nu* disagree by " + format_real(disagreement));

  if (!d.forced) {
    const double tol = opts.tolerances.identity;
    detail::clamp_noise(d.nu_star, tol, d.clamped_entries, d.max_clamp);
    for (Eigen::Index i = 0; i < n; ++i) {
      RowVector row = d.P_star.row(i);
      detail::clamp_noise(row, tol, d.clamped_entries, d.max_clamp);
      d.P_star.row(i) = row;
    }
  }
  d.residuals = verify_duality(d.link, c, d);
  if (!d.forced) {
    const double tol = opts.tolerances.identity;
    if (d.residuals.nu > tol || d.residuals.intertwining > tol || d.residuals.row_sum > tol ||
        d.residuals.min_nu_star < 0.0 || d.residuals.min_p_star < 0.0)
      throw Error(ErrorKind::NumericalFailure,
                  "dual construction residuals exceed tolerance: nu " +
                      format_real(d.residuals.nu) + ", intertwining " +
                      format_real(d.residuals.intertwining));
    if (std::abs(d.P_star(absorbing, absorbing) - 1.0) > tol)
      throw Error(ErrorKind::NumericalFailure, "extremal state is not absorbing in the dual");
  }
  return d;
}

/// Birth-death formulas for a totally ordered state space, cross-checked
/// against build_ssd on the same input.
inline DualChain build_ssd_linear(const Chain& c, const StationaryLaw& law, Direction dir,
                                  const DualOptions& opts = {}) {
  if (!c.poset.is_total_order())
    throw Error(ErrorKind::NotTotalOrder, "state space is not totally ordered");
  if (!c.nu) throw Error(ErrorKind::InvalidArgument, "build_ssd_linear needs an initial law");
  const auto n = static_cast<Eigen::Index>(c.size());
  const double tol = opts.monotonicity.tolerance;
  RowVector g = c.nu->cwiseQuotient(law.pi);
  Chain rev = reverse(c, law, opts.tolerances);
  const Matrix& R = rev.P;

  // Preconditions: g monotone in the right sense, reversed chain
  // stochastically monotone (cumulative tails increasing in the row).
  MonotonicityReport g_report;
  g_report.notion = dir == Direction::down ? Notion::function_mobius_down : Notion::function_mobius_up;
  g_report.tolerance_used = tol;
  g_report.worst_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    double step = dir == Direction::down ? g(i) - g(i + 1) : g(i + 1) - g(i);
    if (step < g_report.worst_value) {
      g_report.worst_value = step;
      g_report.witness = std::pair{static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1)};
    }
  }
  if (n == 1) g_report.worst_value = 0.0;
  g_report.verdict = g_report.worst_value >= -tol;
  MonotonicityReport k_report;
  k_report.notion = Notion::strong_stochastic;
  k_report.tolerance_used = tol;
  k_report.worst_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      double gap = R.row(i + 1).tail(n - a).sum() - R.row(i).tail(n - a).sum();
      if (gap < k_report.worst_value) {
        k_report.worst_value = gap;
        k_report.witness = std::pair{static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1)};
      }
    }
  if (n == 1) k_report.worst_value = 0.0;
  k_report.verdict = k_report.worst_value >= -tol;
  if ((!g_report.verdict || !k_report.verdict) && !opts.force)
    throw PreconditionError("linear-order dual preconditions fail", {g_report, k_report});

  DualChain d;
  d.direction = dir;
  d.preconditions = {g_report, k_report};
  d.forced = !g_report.verdict || !k_report.verdict;
  d.absorbing_index = dir == Direction::down ? static_cast<std::size_t>(n - 1) : 0;
  d.nu_star = RowVector::Zero(n);
  d.P_star = Matrix::Zero(n, n);
  RowVector H(n);
  if (dir == Direction::down) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) H(i) = (acc += law.pi(i));
    // cumulative reversed mass R(j, {1..i})
    auto below = [&](Eigen::Index j, Eigen::Index i) {
      return j >= n ? 0.0 : R.row(j).head(i + 1).sum();
    };
    for (Eigen::Index i = 0; i < n; ++i) {
      double next = i + 1 < n ? g(i + 1) : 0.0;
      d.nu_star(i) = H(i) * (g(i) - next);
      for (Eigen::Index j = 0; j < n; ++j)
        d.P_star(i, j) = H(j) / H(i) * (below(j, i) - below(j + 1, i));
    }
  } else {
    double acc = 0.0;
    for (Eigen::Index i = n; i-- > 0;) H(i) = (acc += law.pi(i));
    auto above = [&](Eigen::Index j, Eigen::Index i) {
      return j < 0 ? 0.0 : R.row(j).tail(n - i).sum();
    };
    for (Eigen::Index i = 0; i < n; ++i) {
      double prev = i > 0 ? g(i - 1) : 0.0;
      d.nu_star(i) = H(i) * (g(i) - prev);
      for (Eigen::Index j = 0; j < n; ++j)
        d.P_star(i, j) = H(j) / H(i) * (above(j, i) - above(j - 1, i));
    }
  }
  d.link.direction = dir;
  d.link.H = H;
  d.link.Lambda = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (dir == Direction::down ? i <= j : i >= j) d.link.Lambda(j, i) = law.pi(i) / H(j);
  d.residuals = verify_duality(d.link, c, d);

  // Cross-check with the general construction.
  ZetaMobius zm = zeta_mobius(c.poset);
  DualOptions general = opts;
  general.force = true;
  DualChain full = build_ssd(c, law, zm, dir, general);
  double gap = std::max((full.P_star - d.P_star).cwiseAbs().maxCoeff(),
                        (full.nu_star - d.nu_star).cwiseAbs().maxCoeff());
  if (gap > 1e-12)
    throw Error(ErrorKind::NumericalFailure,
                "linear-order formulas disagree with the general dual by " + format_real(gap));
  return d;
}

}  // namespace mobius
