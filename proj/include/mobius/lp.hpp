#pragma once

// Dense two-phase simplex for small linear programs
//
//   minimize c.x  subject to  A_ge x >= b_ge,  A_eq x = b_eq,  0 <= x <= upper.
//
// Bland's rule is used throughout; the programs solved here are tiny and
// highly degenerate, so termination matters more than pivot count.

#include "mobius/core.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace mobius::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Problem {
  ColVector c;
  Matrix A_ge;
  ColVector b_ge;
  Matrix A_eq;
  ColVector b_eq;
  ColVector upper;  // size n; +inf means no upper bound
};

struct Solution {
  Status status = Status::infeasible;
  double objective = 0.0;
  ColVector x;
  std::size_t pivots = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(Matrix rows, ColVector rhs, std::vector<Eigen::Index> basis)
      : t_(std::move(rows)), rhs_(std::move(rhs)), basis_(std::move(basis)) {}

  // Minimizes cost.x over the current tableau. Columns with allowed[j] false
  // never enter the basis.
  Status minimize(const ColVector& cost, const std::vector<bool>& allowed, std::size_t& pivots,
                  std::size_t max_pivots) {
    const Eigen::Index m = t_.rows(), n = t_.cols();
    constexpr double eps = 1e-11;
    while (pivots < max_pivots) {
      // reduced costs: cost_j - cost_B . column_j
      ColVector cb(m);
      for (Eigen::Index i = 0; i < m; ++i) cb(i) = cost(basis_[i]);
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!allowed[j]) continue;
        double rc = cost(j) - cb.dot(t_.col(j));
        if (rc < -eps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return Status::optimal;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t_(i, enter) > eps) {
          double ratio = rhs_(i) / t_(i, enter);
          if (ratio < best - 1e-14 ||
              (std::abs(ratio - best) <= 1e-14 && leave >= 0 && basis_[i] < basis_[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return Status::unbounded;
      pivot(leave, enter);
      ++pivots;
    }
    return Status::iteration_limit;
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    double p = t_(r, c);
    t_.row(r) /= p;
    rhs_(r) /= p;
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      double f = t_(i, c);
      if (f == 0.0) continue;
      t_.row(i) -= f * t_.row(r);
      rhs_(i) -= f * rhs_(r);
    }
    basis_[r] = c;
  }

  const Matrix& rows() const { return t_; }
  const ColVector& rhs() const { return rhs_; }
  std::vector<Eigen::Index>& basis() { return basis_; }

 private:
  Matrix t_;
  ColVector rhs_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

inline Solution solve(const Problem& pr, std::size_t max_pivots = 200000) {
  const Eigen::Index n = pr.c.size();
  const Eigen::Index mg = pr.A_ge.rows(), me = pr.A_eq.rows();
  std::vector<Eigen::Index> bounded;
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::isfinite(pr.upper(j))) bounded.push_back(j);
  const auto mu = static_cast<Eigen::Index>(bounded.size());
  const Eigen::Index m = mg + me + mu;
  // columns: x (n) | surplus for >= rows (mg) | slack for upper rows (mu) | artificials (m)
  const Eigen::Index n_struct = n + mg + mu;
  const Eigen::Index cols = n_struct + m;
  Matrix T = Matrix::Zero(m, cols);
  ColVector rhs(m);
  for (Eigen::Index i = 0; i < mg; ++i) {
    T.row(i).head(n) = pr.A_ge.row(i);
    T(i, n + i) = -1.0;
    rhs(i) = pr.b_ge(i);
  }
  for (Eigen::Index i = 0; i < me; ++i) {
    T.row(mg + i).head(n) = pr.A_eq.row(i);
    rhs(mg + i) = pr.b_eq(i);
  }
  for (Eigen::Index k = 0; k < mu; ++k) {
    T(mg + me + k, bounded[k]) = 1.0;
    T(mg + me + k, n + mg + k) = 1.0;
    rhs(mg + me + k) = pr.upper(bounded[k]);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (rhs(i) < 0) {
      T.row(i) *= -1.0;
      rhs(i) *= -1.0;
    }
    T(i, n_struct + i) = 1.0;
  }
  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = n_struct + i;

  detail::Tableau tab(std::move(T), std::move(rhs), std::move(basis));
  Solution sol;
  ColVector phase1 = ColVector::Zero(cols);
  phase1.tail(m).setOnes();
  std::vector<bool> allowed(cols, true);
  Status st = tab.minimize(phase1, allowed, sol.pivots, max_pivots);
  if (st == Status::iteration_limit) {
    sol.status = st;
    return sol;
  }
  double infeas = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (tab.basis()[i] >= n_struct) infeas += tab.rhs()(i);
  if (infeas > 1e-9) {
    sol.status = Status::infeasible;
    return sol;
  }
  // Drive zero-level artificials out of the basis where possible.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis()[i] < n_struct) continue;
    for (Eigen::Index j = 0; j < n_struct; ++j)
      if (std::abs(tab.rows()(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
  }
  for (Eigen::Index j = n_struct; j < cols; ++j) allowed[j] = false;
  ColVector phase2 = ColVector::Zero(cols);
  phase2.head(n) = pr.c;
  st = tab.minimize(phase2, allowed, sol.pivots, max_pivots);
  sol.status = st;
  if (st != Status::optimal) return sol;
  ColVector full = ColVector::Zero(cols);
  for (Eigen::Index i = 0; i < m; ++i) full(tab.basis()[i]) = tab.rhs()(i);
  sol.x = full.head(n);
  sol.objective = pr.c.dot(sol.x);
  return sol;
}

}  // namespace mobius::lp
