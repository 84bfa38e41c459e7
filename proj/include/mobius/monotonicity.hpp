#pragma once

// Decision procedures for the monotonicity notions of a kernel on a poset:
// down/up Moebius monotonicity of kernels and of functions, weak stochastic
// monotonicity (by linear programming) and strong stochastic monotonicity
// (by enumerating up-sets). Every verdict carries a numerical witness.

#include "mobius/chain.hpp"
#include "mobius/core.hpp"
#include "mobius/exact.hpp"
#include "mobius/lp.hpp"
#include "mobius/poset.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mobius {

enum class Notion {
  mobius_down,
  mobius_up,
  weak_down,
  weak_up,
  strong_stochastic,
  function_mobius_down,
  function_mobius_up,
};

inline const char* to_string(Notion n) {
  switch (n) {
    case Notion::mobius_down: return "mobius_down";
    case Notion::mobius_up: return "mobius_up";
    case Notion::weak_down: return "weak_down";
    case Notion::weak_up: return "weak_up";
    case Notion::strong_stochastic: return "strong_stochastic";
    case Notion::function_mobius_down: return "function_mobius_down";
    case Notion::function_mobius_up: return "function_mobius_up";
  }
  return "unknown";
}

/// Verdict plus witness. `verdict == (worst_value >= -tolerance_used)`.
/// For kernel notions `witness` is a (row, column) or (lower, upper) state
/// pair; for function notions both entries hold the offending index.
struct MonotonicityReport {
  Notion notion = Notion::mobius_down;
  bool verdict = true;
  double worst_value = 0.0;
  std::optional<std::pair<std::size_t, std::size_t>> witness;
  std::string witness_description;
  double tolerance_used = 1e-10;
  // entries in (-tolerance, 0) that were treated as zero
  std::size_t near_zero_negatives = 0;
  bool exact = false;
  std::optional<Matrix> transformed;
  std::optional<RowVector> transformed_vector;
};

struct MonotonicityOptions {
  double tolerance = 1e-10;
  // Re-decide verdicts with |worst| < 100 tolerance in rational arithmetic
  // when an exact kernel is available.
  bool exact = false;
  std::size_t up_set_cap = std::size_t{1} << 20;
  std::size_t lp_state_cap = 256;
};

class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& message, std::vector<MonotonicityReport> reports)
      : Error(ErrorKind::PreconditionFailed, message), reports_(std::move(reports)) {}
  const std::vector<MonotonicityReport>& reports() const { return reports_; }

 private:
  std::vector<MonotonicityReport> reports_;
};

/// C^{-1} P C (down) or (C^T)^{-1} P C^T (up).
inline Matrix mobius_transform(const Matrix& P, const ZetaMobius& zm, Direction dir) {
  require_size(static_cast<std::size_t>(P.rows()), zm.size(), "mobius_transform");
  if (dir == Direction::down) return zm.Cinv * P * zm.C;
  return zm.Cinv.transpose() * P * zm.C.transpose();
}

template <class T>
DenseMatrix<T> mobius_transform(const DenseMatrix<T>& P, const ZetaMobius& zm, Direction dir) {
  auto C = from_integer<T>(zm.zeta);
  auto Ci = from_integer<T>(zm.mobius);
  if (dir == Direction::down) return Ci * P * C;
  return Ci.transpose() * P * C.transpose();
}

namespace detail {

inline void scan_minimum(MonotonicityReport& r, const Matrix& K, double tol) {
  r.worst_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      double v = K(i, j);
      if (v < 0.0 && v >= -tol) ++r.near_zero_negatives;
      if (v < r.worst_value) {
        r.worst_value = v;
        r.witness = std::pair{static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
      }
    }
  r.tolerance_used = tol;
  r.verdict = r.worst_value >= -tol;
}

template <class T>
std::pair<T, std::pair<std::size_t, std::size_t>> exact_minimum(const DenseMatrix<T>& K) {
  T best = K(0, 0);
  std::pair<std::size_t, std::size_t> at{0, 0};
  for (std::size_t i = 0; i < K.rows(); ++i)
    for (std::size_t j = 0; j < K.cols(); ++j)
      if (K(i, j) < best) {
        best = K(i, j);
        at = {i, j};
      }
  return {best, at};
}

}  // namespace detail

/// Kernel Moebius monotonicity of a bare matrix. `exact_kernel`, when given
/// and `opts.exact` is set, settles near-boundary verdicts exactly.
inline MonotonicityReport mobius_monotone(const Matrix& P, const ZetaMobius& zm, Direction dir,
                                          const MonotonicityOptions& opts = {},
                                          const RationalMatrix* exact_kernel = nullptr) {
  MonotonicityReport r;
  r.notion = dir == Direction::down ? Notion::mobius_down : Notion::mobius_up;
  Matrix K = mobius_transform(P, zm, dir);
  detail::scan_minimum(r, K, opts.tolerance);
  if (opts.exact && exact_kernel && std::abs(r.worst_value) < 100.0 * opts.tolerance) {
    auto KE = mobius_transform(*exact_kernel, zm, dir);
    auto [best, at] = detail::exact_minimum(KE);
    r.exact = true;
    r.tolerance_used = 0.0;
    r.worst_value = to_double(best);
    r.witness = at;
    r.verdict = best >= 0;
    r.near_zero_negatives = 0;
  }
  r.transformed = std::move(K);
  return r;
}

inline MonotonicityReport mobius_monotone_down(const Chain& c, const ZetaMobius& zm,
                                               const MonotonicityOptions& opts = {}) {
  return mobius_monotone(c.P, zm, Direction::down, opts, c.exact ? &*c.exact : nullptr);
}

inline MonotonicityReport mobius_monotone_up(const Chain& c, const ZetaMobius& zm,
                                             const MonotonicityOptions& opts = {}) {
  return mobius_monotone(c.P, zm, Direction::up, opts, c.exact ? &*c.exact : nullptr);
}

/// down: f (C^T)^{-1} >= 0;  up: f C^{-1} >= 0.
inline MonotonicityReport function_mobius_monotone(const RowVector& f, const ZetaMobius& zm,
                                                   Direction dir,
                                                   const MonotonicityOptions& opts = {}) {
  MonotonicityReport r;
  r.notion = dir == Direction::down ? Notion::function_mobius_down : Notion::function_mobius_up;
  RowVector h = dir == Direction::down ? diff_up(f, zm) : diff_down(f, zm);
  r.worst_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (h(i) < 0.0 && h(i) >= -opts.tolerance) ++r.near_zero_negatives;
    if (h(i) < r.worst_value) {
      r.worst_value = h(i);
      r.witness = std::pair{static_cast<std::size_t>(i), static_cast<std::size_t>(i)};
    }
  }
  r.tolerance_used = opts.tolerance;
  r.verdict = r.worst_value >= -opts.tolerance;
  r.transformed_vector = std::move(h);
  return r;
}

/// Visits every up-set of `p` as a 0/1 membership vector. Throws
/// UpSetExplosion once more than `cap` up-sets have been produced.
inline std::size_t for_each_up_set(const Poset& p, std::size_t cap,
                                   const std::function<void(const std::vector<char>&)>& visit) {
  const std::size_t m = p.size();
  std::vector<std::vector<std::size_t>> strict_up(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (p.leq(i, j)) strict_up[i].push_back(j);
  std::vector<char> member(m, 0);
  std::size_t count = 0;
  // Elements are decided from the top of the enumeration down, so everything
  // above e_i is settled when e_i is considered.
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == 0) {
      if (++count > cap)
        throw Error(ErrorKind::UpSetExplosion,
                    "more than " + std::to_string(cap) + " up-sets; raise the cap to continue",
                    {{"cap", std::to_string(cap)}});
      visit(member);
      return;
    }
    std::size_t i = k - 1;
    rec(i);
    bool closed = true;
    for (std::size_t j : strict_up[i])
      if (!member[j]) {
        closed = false;
        break;
      }
    if (closed) {
      member[i] = 1;
      rec(i);
      member[i] = 0;
    }
  };
  rec(m);
  return count;
}

namespace detail {

inline std::string describe_set(const Poset& p, const std::vector<char>& member) {
  std::string s = "{";
  bool first = true;
  for (std::size_t i = 0; i < member.size(); ++i)
    if (member[i]) {
      s += (first ? "" : ", ") + p.label(i);
      first = false;
    }
  return s + "}";
}

}  // namespace detail

/// P(e_i, A) <= P(e_j, A) for every up-set A and every e_i <= e_j. Checking
/// cover pairs suffices since the inequality chains along covers.
inline MonotonicityReport strong_stochastic_monotone(const Chain& c,
                                                     const MonotonicityOptions& opts = {}) {
  MonotonicityReport r;
  r.notion = Notion::strong_stochastic;
  r.tolerance_used = opts.tolerance;
  r.worst_value = std::numeric_limits<double>::infinity();
  const auto covers = c.poset.covers();
  std::vector<char> worst_set;
  const Eigen::Index m = c.P.rows();
  for_each_up_set(c.poset, opts.up_set_cap, [&](const std::vector<char>& member) {
    ColVector mass = ColVector::Zero(m);
    for (Eigen::Index k = 0; k < m; ++k)
      if (member[k]) mass += c.P.col(k);
    for (auto [i, j] : covers) {
      double gap = mass(j) - mass(i);
      if (gap < 0.0 && gap >= -opts.tolerance) ++r.near_zero_negatives;
      if (gap < r.worst_value) {
        r.worst_value = gap;
        r.witness = std::pair{i, j};
        worst_set = member;
      }
    }
  });
  if (covers.empty()) r.worst_value = 0.0;
  r.verdict = r.worst_value >= -opts.tolerance;
  if (r.witness) {
    r.witness_description = "up-set " + detail::describe_set(c.poset, worst_set) + ", pair " +
                            c.poset.label(r.witness->first) + " <= " +
                            c.poset.label(r.witness->second);
    if (opts.exact && c.exact && std::abs(r.worst_value) < 100.0 * opts.tolerance) {
      // exact re-run of the whole decision
      Rational best = 0;
      bool any = false;
      std::pair<std::size_t, std::size_t> at{};
      for_each_up_set(c.poset, opts.up_set_cap, [&](const std::vector<char>& member) {
        for (auto [i, j] : covers) {
          Rational gap = 0;
          for (std::size_t k = 0; k < c.size(); ++k)
            if (member[k]) gap += (*c.exact)(j, k) - (*c.exact)(i, k);
          if (!any || gap < best) {
            best = gap;
            at = {i, j};
            any = true;
          }
        }
      });
      r.exact = true;
      r.tolerance_used = 0.0;
      r.worst_value = to_double(best);
      r.witness = at;
      r.verdict = best >= 0;
      r.near_zero_negatives = 0;
    }
  }
  return r;
}

/// Weak stochastic monotonicity (cone preservation). For every principal set
/// S = {e_j}^up (up) or {e_j}^down (down) with indicator u, the program
///
///   minimize delta P u   s.t.  delta C_S >= 0,  sum(delta) = 0,  -1 <= delta <= 1
///
/// is solved, where C_S = C^T (up) or C (down); the kernel is weakly
/// monotone iff every optimum is >= -tolerance. The box only compactifies
/// the cone, so the sign of each optimum is scale-free.
inline MonotonicityReport weak_monotone(const Chain& c, const ZetaMobius& zm, Direction dir,
                                        const MonotonicityOptions& opts = {}) {
  const std::size_t m = c.size();
  require_size(zm.size(), m, "weak_monotone");
  if (m > opts.lp_state_cap)
    throw Error(ErrorKind::UpSetExplosion,
                "weak monotonicity LP limited to " + std::to_string(opts.lp_state_cap) + " states",
                {{"cap", std::to_string(opts.lp_state_cap)}});
  MonotonicityReport r;
  r.notion = dir == Direction::down ? Notion::weak_down : Notion::weak_up;
  r.tolerance_used = opts.tolerance;
  r.worst_value = std::numeric_limits<double>::infinity();

  const auto n = static_cast<Eigen::Index>(m);
  // Rows of A_ge are the cumulative-mass functionals on delta.
  Matrix cone = dir == Direction::up ? Matrix(zm.C) : Matrix(zm.C.transpose());
  Matrix PS = dir == Direction::up ? Matrix(c.P * zm.C.transpose()) : Matrix(c.P * zm.C);
  // Substitute x = delta + 1 so that 0 <= x <= 2.
  lp::Problem pr;
  pr.A_ge = cone;
  pr.b_ge = cone * ColVector::Ones(n);
  pr.A_eq = Matrix::Ones(1, n);
  pr.b_eq = ColVector::Constant(1, static_cast<double>(n));
  pr.upper = ColVector::Constant(n, 2.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    pr.c = PS.col(j);
    lp::Solution sol = lp::solve(pr);
    if (sol.status != lp::Status::optimal)
      throw Error(ErrorKind::LPFailure,
                  "weak monotonicity LP did not reach an optimum for set of " +
                      c.poset.label(static_cast<std::size_t>(j)),
                  {{"set", c.poset.label(static_cast<std::size_t>(j))}});
    double value = sol.objective - pr.c.sum();
    if (value < 0.0 && value >= -opts.tolerance) ++r.near_zero_negatives;
    if (value < r.worst_value) {
      r.worst_value = value;
      r.witness = std::pair{static_cast<std::size_t>(j), static_cast<std::size_t>(j)};
      r.transformed_vector = (sol.x - ColVector::Ones(n)).transpose();
    }
  }
  r.verdict = r.worst_value >= -opts.tolerance;
  if (r.witness)
    r.witness_description = std::string(dir == Direction::up ? "up" : "down") + "-set of " +
                            c.poset.label(r.witness->first);
  return r;
}

}  // namespace mobius
