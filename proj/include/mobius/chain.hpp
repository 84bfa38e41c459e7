#pragma once

// Stochastic kernels on a poset: validation, ergodicity, stationary law,
// time reversal and the summation / difference operators.
//
// Laws and functions are row vectors acting on the left (nu P).

#include "mobius/core.hpp"
#include "mobius/exact.hpp"
#include "mobius/poset.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mobius {

struct Chain {
  Poset poset;
  Matrix P;
  std::optional<RowVector> nu;
  // Exact kernel, present when the kernel came from rational input.
  std::optional<RationalMatrix> exact;

  std::size_t size() const { return static_cast<std::size_t>(P.rows()); }
};

struct StationaryLaw {
  RowVector pi;
  double residual = 0.0;  // max |pi P - pi|
};

inline void validate_probability_vector(const RowVector& v, std::string_view what, double tol) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v(i) >= 0.0))
      throw Error(ErrorKind::NotStochastic,
                  std::string(what) + " has negative entry at index " + std::to_string(i),
                  {{"index", std::to_string(i)}, {"value", format_real(v(i))}});
    sum += v(i);
  }
  if (std::abs(sum - 1.0) > tol)
    throw Error(ErrorKind::NotStochastic,
                std::string(what) + " sums to " + format_real(sum) + ", not 1",
                {{"sum", format_real(sum)}});
}

/// Checks shape and stochasticity. Every offending row is reported, not only
/// the first one.
inline Chain validate_chain(Matrix P, Poset poset, std::optional<RowVector> nu = std::nullopt,
                            const Tolerances& tol = {}) {
  if (P.rows() != P.cols())
    throw Error(ErrorKind::DimensionMismatch, "transition matrix must be square");
  require_size(static_cast<std::size_t>(P.rows()), poset.size(), "transition matrix");

  std::vector<std::string> problems;
  std::string rows_csv;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    bool bad = false;
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      if (!(P(i, j) >= 0.0)) {
        problems.push_back("P(" + std::to_string(i) + "," + std::to_string(j) +
                           ") = " + format_real(P(i, j)) + " is negative");
        bad = true;
      }
    }
    double s = P.row(i).sum();
    if (!(std::abs(s - 1.0) <= tol.row)) {
      problems.push_back("row " + std::to_string(i) + " (" + poset.label(i) + ") sums to " +
                         format_real(s));
      bad = true;
    }
    if (bad) rows_csv += (rows_csv.empty() ? "" : ",") + std::to_string(i);
  }
  if (!problems.empty()) {
    std::string msg = "transition matrix is not stochastic: ";
    for (std::size_t k = 0; k < problems.size(); ++k) msg += (k ? "; " : "") + problems[k];
    throw Error(ErrorKind::NotStochastic, msg, {{"rows", rows_csv}});
  }
  if (nu) {
    require_size(static_cast<std::size_t>(nu->size()), poset.size(), "initial law");
    validate_probability_vector(*nu, "initial law", tol.row);
  }
  return Chain{std::move(poset), std::move(P), std::move(nu), std::nullopt};
}

namespace detail {

inline std::vector<std::size_t> reachable(const Matrix& P, std::size_t from, bool forward) {
  const auto m = static_cast<std::size_t>(P.rows());
  std::vector<std::size_t> dist(m, static_cast<std::size_t>(-1));
  std::vector<std::size_t> queue{from};
  dist[from] = 0;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    std::size_t u = queue[h];
    for (std::size_t v = 0; v < m; ++v) {
      double w = forward ? P(u, v) : P(v, u);
      if (w > 0.0 && dist[v] == static_cast<std::size_t>(-1)) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace detail

/// Strong connectivity of the support digraph and period 1. Throws
/// NotIrreducible with a separated pair, or NotAperiodic with the period.
inline void check_ergodic(const Poset& poset, const Matrix& P) {
  constexpr auto unreached = static_cast<std::size_t>(-1);
  const auto m = static_cast<std::size_t>(P.rows());
  auto fwd = detail::reachable(P, 0, true);
  auto bwd = detail::reachable(P, 0, false);
  for (std::size_t v = 0; v < m; ++v) {
    if (fwd[v] == unreached)
      throw Error(ErrorKind::NotIrreducible,
                  "chain is not irreducible: " + poset.label(v) + " is not reachable from " +
                      poset.label(0),
                  {{"from", poset.label(0)}, {"to", poset.label(v)}});
    if (bwd[v] == unreached)
      throw Error(ErrorKind::NotIrreducible,
                  "chain is not irreducible: " + poset.label(0) + " is not reachable from " +
                      poset.label(v),
                  {{"from", poset.label(v)}, {"to", poset.label(0)}});
  }
  // period = gcd over edges (u,v) of level(u) + 1 - level(v)
  std::size_t period = 0;
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t v = 0; v < m; ++v)
      if (P(u, v) > 0.0) {
        auto diff = static_cast<long long>(fwd[u]) + 1 - static_cast<long long>(fwd[v]);
        period = std::gcd(period, static_cast<std::size_t>(std::llabs(diff)));
      }
  if (period != 1)
    throw Error(ErrorKind::NotAperiodic, "chain is periodic with period " + std::to_string(period),
                {{"period", std::to_string(period)}});
}

/// Solves pi P = pi, sum(pi) = 1 by Grassmann-Taksar-Heyman elimination.
/// Subtraction free, so small entries of pi keep full relative accuracy.
inline StationaryLaw stationary(const Chain& c) {
  check_ergodic(c.poset, c.P);
  const Eigen::Index m = c.P.rows();
  Matrix A = c.P;
  for (Eigen::Index n = m - 1; n > 0; --n) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) s += A(n, j);
    if (!(s > 0.0)) throw Error(ErrorKind::NumericalFailure, "stationary elimination hit a zero pivot");
    for (Eigen::Index i = 0; i < n; ++i) A(i, n) /= s;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) A(i, j) += A(i, n) * A(n, j);
  }
  ColVector x = ColVector::Zero(m);
  x(0) = 1.0;
  for (Eigen::Index n = 1; n < m; ++n)
    for (Eigen::Index i = 0; i < n; ++i) x(n) += x(i) * A(i, n);
  StationaryLaw law;
  law.pi = x.transpose();
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(law.pi(i) > 0.0))
      throw Error(ErrorKind::NumericalFailure,
                  "stationary solve produced a non-positive entry at " + c.poset.label(i));
  law.pi /= law.pi.sum();
  law.residual = (law.pi * c.P - law.pi).cwiseAbs().maxCoeff();
  return law;
}

/// Exact stationary law of a rational kernel (assumed ergodic).
inline std::vector<Rational> exact_stationary(const RationalMatrix& P) {
  const std::size_t m = P.rows();
  // x (P - I) = 0 with the last column replaced by ones: x A = e_last.
  RationalMatrix A = P;
  for (std::size_t i = 0; i < m; ++i) A(i, i) -= 1;
  for (std::size_t i = 0; i < m; ++i) A(i, m - 1) = 1;
  std::vector<Rational> rhs(m, Rational(0));
  rhs[m - 1] = 1;
  auto x = solve_left(A, rhs);
  if (!x) throw Error(ErrorKind::NumericalFailure, "exact stationary system is singular");
  return *x;
}

/// diag(pi)^{-1} P^T diag(pi), re-validated as a stochastic kernel.
inline Chain reverse(const Chain& c, const StationaryLaw& law, const Tolerances& tol = {}) {
  require_size(static_cast<std::size_t>(law.pi.size()), c.size(), "stationary law");
  const Eigen::Index m = c.P.rows();
  Matrix R(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) R(i, j) = law.pi(j) * c.P(j, i) / law.pi(i);
  Tolerances loose = tol;
  loose.row = std::max(tol.row, tol.identity);
  Chain out = validate_chain(std::move(R), c.poset, c.nu, loose);
  if (c.exact) {
    auto pi = exact_stationary(*c.exact);
    RationalMatrix E(c.size(), c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j) E(i, j) = pi[j] * (*c.exact)(j, i) / pi[i];
    out.exact = std::move(E);
  }
  return out;
}

// S_down f = f C, S_up f = f C^T, D_down f = f C^{-1}, D_up f = f (C^T)^{-1}.

inline RowVector sum_down(const RowVector& f, const ZetaMobius& zm) {
  require_size(static_cast<std::size_t>(f.size()), zm.size(), "sum_down");
  return f * zm.C;
}
inline RowVector sum_up(const RowVector& f, const ZetaMobius& zm) {
  require_size(static_cast<std::size_t>(f.size()), zm.size(), "sum_up");
  return f * zm.C.transpose();
}
inline RowVector diff_down(const RowVector& f, const ZetaMobius& zm) {
  require_size(static_cast<std::size_t>(f.size()), zm.size(), "diff_down");
  return f * zm.Cinv;
}
inline RowVector diff_up(const RowVector& f, const ZetaMobius& zm) {
  require_size(static_cast<std::size_t>(f.size()), zm.size(), "diff_up");
  return f * zm.Cinv.transpose();
}

}  // namespace mobius
