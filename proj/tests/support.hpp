#pragma once

// Independent oracles and random model generators shared by the unit and
// acceptance suites. Nothing here calls the routine it is used to check.

#include "mobius/availability.hpp"
#include "mobius/chain.hpp"
#include "mobius/convergence.hpp"
#include "mobius/cube_models.hpp"
#include "mobius/monotonicity.hpp"
#include "mobius/poset.hpp"
#include "mobius/ssd_dual.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using namespace mobius;

template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& A) {
  return A.size() ? A.cwiseAbs().maxCoeff() : 0.0;
}

// --- posets ----------------------------------------------------------------

inline Poset diamond() { return build_poset({"a", "b", "c", "d"}, {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}}); }

inline Poset fence() { return build_poset({"a", "b", "c", "d"}, {{"a", "b"}, {"c", "b"}, {"c", "d"}}); }

inline Poset linear(std::size_t m) {
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> rel;
  for (std::size_t i = 1; i <= m; ++i) labels.push_back(std::to_string(i));
  for (std::size_t i = 1; i < m; ++i) rel.emplace_back(std::to_string(i), std::to_string(i + 1));
  return build_poset(labels, rel);
}

// 0 < a < b < 1, 0 < c < 1
inline Poset pentagon() {
  return build_poset({"0", "a", "b", "c", "1"}, {{"0", "a"}, {"a", "b"}, {"b", "1"}, {"0", "c"}, {"c", "1"}});
}

// 0 < x, y, z < 1
inline Poset m3() {
  return build_poset({"0", "x", "y", "z", "1"},
                     {{"0", "x"}, {"0", "y"}, {"0", "z"}, {"x", "1"}, {"y", "1"}, {"z", "1"}});
}

// {0,1}^2 x {0,1,2}
inline Poset square_times_chain() {
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> rel;
  auto name = [](int a, int b, int k) { return std::to_string(a) + std::to_string(b) + std::to_string(k); };
  for (int k = 0; k < 3; ++k)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        labels.push_back(name(a, b, k));
        if (a == 0) rel.emplace_back(name(a, b, k), name(1, b, k));
        if (b == 0) rel.emplace_back(name(a, b, k), name(a, 1, k));
        if (k < 2) rel.emplace_back(name(a, b, k), name(a, b, k + 1));
      }
  return build_poset(labels, rel);
}

/// mu(x,x) = 1, mu(x,y) = -sum_{x <= z < y} mu(x,z), by forward recursion
/// over the enumeration.
inline IntMatrix oracle_mobius(const Poset& p) {
  const auto m = static_cast<Eigen::Index>(p.size());
  IntMatrix mu = IntMatrix::Zero(m, m);
  for (Eigen::Index x = 0; x < m; ++x) {
    mu(x, x) = 1;
    for (Eigen::Index y = x + 1; y < m; ++y) {
      if (!p.leq(x, y)) continue;
      std::int64_t acc = 0;
      for (Eigen::Index z = x; z < y; ++z)
        if (p.leq(x, z) && p.leq(z, y)) acc += mu(x, z);
      mu(x, y) = -acc;
    }
  }
  return mu;
}

/// Exhaustive meet/join existence check.
inline bool oracle_is_lattice(const Poset& p) {
  const std::size_t m = p.size();
  for (std::size_t x = 0; x < m; ++x)
    for (std::size_t y = 0; y < m; ++y) {
      int lower_max = 0, upper_min = 0;
      for (std::size_t z = 0; z < m; ++z) {
        if (p.leq(z, x) && p.leq(z, y)) {
          bool greatest = true;
          for (std::size_t w = 0; w < m; ++w)
            if (p.leq(w, x) && p.leq(w, y) && !p.leq(w, z)) greatest = false;
          lower_max += greatest;
        }
        if (p.leq(x, z) && p.leq(y, z)) {
          bool least = true;
          for (std::size_t w = 0; w < m; ++w)
            if (p.leq(x, w) && p.leq(y, w) && !p.leq(z, w)) least = false;
          upper_min += least;
        }
      }
      if (lower_max != 1 || upper_min != 1) return false;
    }
  return true;
}

// --- chains ----------------------------------------------------------------

/// The displayed 2-cube kernel in the order (0,0), (1,0), (0,1), (1,1).
inline Matrix two_cube_kernel(double a1, double a2, double b1, double b2) {
  Matrix P(4, 4);
  P << 1 - a1 - a2, a1, a2, 0,
       b1, 1 - b1 - a2, 0, a2,
       b2, 0, 1 - a1 - b2, a1,
       0, b2, b1, 1 - b1 - b2;
  return P;
}

/// Displayed C^{-1} P C for the 2-cube.
inline Matrix two_cube_down_transform(double a1, double a2, double b1, double b2) {
  Matrix K(4, 4);
  K << 1 - a1 - a2 - b1 - b2, 0, 0, 0,
       b1, 1 - a2 - b2, 0, 0,
       b2, 0, 1 - a1 - b1, 0,
       0, b2, b1, 1;
  return K;
}

/// Displayed (C^T)^{-1} P C^T for the 2-cube.
inline Matrix two_cube_up_transform(double a1, double a2, double b1, double b2) {
  Matrix K(4, 4);
  K << 1, a1, a2, 0,
       0, 1 - a1 - b1, 0, a2,
       0, 0, 1 - a2 - b2, a1,
       0, 0, 0, 1 - a1 - a2 - b1 - b2;
  return K;
}

/// Stationary law by power iteration of the lazy chain (P + I)/2.
inline RowVector oracle_stationary(const Matrix& P, int iterations = 200000, double tol = 1e-15) {
  const auto m = P.rows();
  Matrix L = 0.5 * (P + Matrix::Identity(m, m));
  RowVector v = RowVector::Constant(m, 1.0 / static_cast<double>(m));
  for (int k = 0; k < iterations; ++k) {
    RowVector w = v * L;
    w /= w.sum();
    double diff = (w - v).cwiseAbs().maxCoeff();
    v = w;
    if (diff < tol) break;
  }
  return v;
}

/// P* = Lambda P Lambda^{-1} with Lambda built directly from pi and the order.
inline Matrix oracle_dual_kernel(const Poset& p, const Matrix& P, const RowVector& pi, Direction dir) {
  const auto m = P.rows();
  Matrix Lambda = Matrix::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      bool related = dir == Direction::down ? p.leq(i, j) : p.leq(j, i);
      if (related) {
        Lambda(j, i) = pi(i);
        h += pi(i);
      }
    }
    Lambda.row(j) /= h;
  }
  return Lambda * P * Lambda.inverse();
}

/// s(nu P^n, pi) from an explicit matrix power.
inline double oracle_separation(const Matrix& P, const RowVector& nu, const RowVector& pi, unsigned n) {
  Matrix Pn = Matrix::Identity(P.rows(), P.cols());
  Matrix base = P;
  for (unsigned k = n; k > 0; k >>= 1) {
    if (k & 1u) Pn = Pn * base;
    base = base * base;
  }
  RowVector law = nu * Pn;
  double s = 0.0;
  for (Eigen::Index e = 0; e < law.size(); ++e) s = std::max(s, 1.0 - law(e) / pi(e));
  return s;
}

// --- random models -----------------------------------------------------------

inline CubeWalkParams random_admissible(unsigned d, std::mt19937_64& rng, double max_total = 1.0) {
  std::uniform_real_distribution<double> u(0.05, 1.0), total(0.2, max_total);
  std::vector<double> w(2 * d);
  double s = 0.0;
  for (auto& x : w) s += (x = u(rng));
  const double t = total(rng);
  CubeWalkParams p{d, {}, {}};
  for (unsigned i = 0; i < d; ++i) {
    p.alpha.push_back(w[i] / s * t);
    p.beta.push_back(w[d + i] / s * t);
  }
  return p;
}

inline Matrix random_stochastic(Eigen::Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix P(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) P(i, j) = u(rng) + 0.01;
    P.row(i) /= P.row(i).sum();
  }
  return P;
}

/// Random birth-death kernel on a linear order of size m.
inline Matrix random_birth_death(Eigen::Index m, std::mt19937_64& rng, double max_step = 0.5) {
  std::uniform_real_distribution<double> u(0.01, max_step);
  Matrix P = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double up = i + 1 < m ? u(rng) : 0.0, down = i > 0 ? u(rng) : 0.0;
    if (up + down > 0.95) {
      const double scale = 0.95 / (up + down);
      up *= scale;
      down *= scale;
    }
    if (i + 1 < m) P(i, i + 1) = up;
    if (i > 0) P(i, i - 1) = down;
    P(i, i) = 1.0 - up - down;
  }
  return P;
}

inline Matrix reverse_kernel(const Matrix& R, const RowVector& pi) {
  return pi.cwiseInverse().asDiagonal() * R.transpose() * pi.asDiagonal();
}

/// A kernel R with C^{-1} R C >= 0 (down) or (C^T)^{-1} R C^T >= 0 (up) on a
/// lattice with unique extremes: a random mixture of "reset to the bottom
/// (top)" and "join (meet) with a" maps over every a, which is ergodic and
/// monotone by construction, then sparse cover-neighbour noise kept only
/// when the transform stays non-negative.
inline Matrix random_mobius_kernel(const Poset& p, Direction dir, std::mt19937_64& rng) {
  const std::size_t m = p.size();
  const auto n = static_cast<Eigen::Index>(m);
  const std::size_t bottom = 0, top = m - 1;
  ZetaMobius zm = zeta_mobius(p);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto covers = p.covers();

  Matrix R = Matrix::Zero(n, n);
  const double reset = 0.05 + 0.25 * u(rng);
  std::vector<double> w(m);
  double total = reset;
  for (auto& x : w) total += (x = u(rng));
  for (std::size_t e = 0; e < m; ++e) {
    R(e, dir == Direction::down ? bottom : top) += reset / total;
    for (std::size_t a = 0; a < m; ++a) {
      auto mj = meet_join(p, e, a);
      if (!mj) throw Error(ErrorKind::NotLattice, "random Moebius kernels need a lattice");
      R(e, dir == Direction::down ? mj->second : mj->first) += w[a] / total;
    }
  }
  if (covers.empty()) return R;
  for (int attempt = 0; attempt < 20; ++attempt) {
    Matrix N = R;
    for (int k = 0; k < 2; ++k) {
      auto [lo, hi] = covers[std::uniform_int_distribution<std::size_t>(0, covers.size() - 1)(rng)];
      const std::size_t from = u(rng) < 0.5 ? lo : hi, to = from == lo ? hi : lo;
      const double mass = std::min(0.05, N(from, from)) * u(rng);
      N(from, from) -= mass;
      N(from, to) += mass;
    }
    if (mobius_transform(N, zm, dir).minCoeff() >= -1e-12) return N;
  }
  return R;
}

/// Chain whose time reversal is a random Moebius monotone kernel, started
/// at the bottom (down) or top (up).
inline Chain random_dual_admissible_chain(const Poset& p, Direction dir, std::mt19937_64& rng) {
  Matrix R = random_mobius_kernel(p, dir, rng);
  RowVector pi = oracle_stationary(R);
  Matrix P = reverse_kernel(R, pi);
  for (Eigen::Index i = 0; i < P.rows(); ++i) P.row(i) /= P.row(i).sum();
  RowVector nu = point_mass(p.size(), dir == Direction::down ? 0 : p.size() - 1);
  return validate_chain(P, p, nu);
}

/// Random Moebius monotone cube kernel: the nearest-neighbour walk raised to
/// a random power, mixed with the identity.
inline Matrix random_mobius_cube_kernel(unsigned d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix P = nearest_neighbor_walk(random_admissible(d, rng)).P;
  if (u(rng) < 0.5) P = P * P;
  const double lazy = 0.3 * u(rng);
  return lazy * Matrix::Identity(P.rows(), P.cols()) + (1 - lazy) * P;
}

}  // namespace testing_support
