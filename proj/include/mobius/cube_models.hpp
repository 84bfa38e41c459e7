#pragma once

// Chains on the d-cube {0,1}^d: the nearest-neighbour up/down walk, chain
// powers, the pairwise g+ transform and a supermodular-order probe.

#include "mobius/chain.hpp"
#include "mobius/core.hpp"
#include "mobius/poset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mobius {

struct CubeWalkParams {
  unsigned d = 0;
  std::vector<double> alpha;  // 0 -> 1 flip probabilities
  std::vector<double> beta;   // 1 -> 0 flip probabilities

  double total_rate() const {
    double s = 0.0;
    for (unsigned i = 0; i < d; ++i) s += alpha[i] + beta[i];
    return s;
  }
  /// sum(alpha + beta) <= 1: the walk is then Moebius monotone both ways.
  bool admissible() const { return total_rate() <= 1.0; }
};

inline void validate_params(const CubeWalkParams& p) {
  if (p.d == 0 || p.d > kMaxCubeDimension)
    throw Error(ErrorKind::DimensionTooLarge,
                "cube dimension must lie in 1.." + std::to_string(kMaxCubeDimension),
                {{"d", std::to_string(p.d)}});
  require_size(p.alpha.size(), p.d, "alpha");
  require_size(p.beta.size(), p.d, "beta");
  for (unsigned i = 0; i < p.d; ++i)
    if (!(p.alpha[i] > 0.0) || !(p.beta[i] > 0.0))
      throw Error(ErrorKind::InvalidArgument,
                  "rates must be positive; coordinate " + std::to_string(i + 1) + " has alpha " +
                      format_real(p.alpha[i]) + ", beta " + format_real(p.beta[i]),
                  {{"coordinate", std::to_string(i + 1)}});
}

inline CubeWalkParams symmetric_walk(unsigned d, double rate) {
  return {d, std::vector<double>(d, rate), std::vector<double>(d, rate)};
}

inline RowVector point_mass(std::size_t m, std::size_t i) {
  RowVector v = RowVector::Zero(static_cast<Eigen::Index>(m));
  v(static_cast<Eigen::Index>(i)) = 1.0;
  return v;
}

/// P(e, e+s_i) = alpha_i, P(e, e-s_i) = beta_i, remainder on the diagonal.
/// The initial law is the point mass at (0,...,0).
inline Chain nearest_neighbor_walk(const CubeWalkParams& p) {
  validate_params(p);
  Poset cube = cube_poset(p.d);
  const std::size_t m = cube.size();
  if (m > kMaxDenseStates)
    throw Error(ErrorKind::DimensionTooLarge,
                "dense kernels are limited to " + std::to_string(kMaxDenseStates) + " states");
  const auto n = static_cast<Eigen::Index>(m);
  Matrix P = Matrix::Zero(n, n);
  for (std::size_t s = 0; s < m; ++s) {
    const std::uint32_t e = cube.cube_mask(s);
    double hold = 1.0;
    for (unsigned i = 0; i < p.d; ++i) {
      const std::uint32_t bit = 1u << i;
      if (e & bit) {
        P(s, cube.index_of_mask(e ^ bit)) = p.beta[i];
        hold -= p.beta[i];
      } else {
        P(s, cube.index_of_mask(e | bit)) = p.alpha[i];
        hold -= p.alpha[i];
      }
    }
    if (hold < 0.0)
      throw Error(ErrorKind::NegativeHoldingProbability,
                  "holding probability at state " + cube.label(s) + " is " + format_real(hold),
                  {{"state", cube.label(s)}, {"value", format_real(hold)}});
    P(s, s) = hold;
  }
  Chain c{std::move(cube), std::move(P), point_mass(m, 0), std::nullopt};
  return c;
}

/// Product-form stationary law of the nearest-neighbour walk.
inline RowVector cube_stationary(const CubeWalkParams& p) {
  validate_params(p);
  Poset cube = cube_poset(p.d);
  RowVector pi(static_cast<Eigen::Index>(cube.size()));
  for (std::size_t s = 0; s < cube.size(); ++s) {
    double v = 1.0;
    for (unsigned i = 0; i < p.d; ++i) {
      const double z = p.alpha[i] + p.beta[i];
      v *= (cube.cube_mask(s) >> i) & 1u ? p.alpha[i] / z : p.beta[i] / z;
    }
    pi(static_cast<Eigen::Index>(s)) = v;
  }
  return pi;
}

inline Chain power_chain(const Chain& c, unsigned k) {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "power must be at least 1");
  Chain out = c;
  for (unsigned i = 1; i < k; ++i) out.P = out.P * c.P;
  if (c.exact) {
    RationalMatrix E = *c.exact;
    for (unsigned i = 1; i < k; ++i) E = E * *c.exact;
    out.exact = std::move(E);
  }
  return out;
}

struct GPlusMove {
  std::size_t row = 0;
  std::size_t x = 0;
  std::size_t y = 0;
  double kappa = 0.0;
};

/// Moves mass kappa from each of the incomparable x, y in `row` to x v y
/// and x ^ y. Other rows are untouched.
inline Chain gplus_transform(const Chain& c, const GPlusMove& mv) {
  const Poset& p = c.poset;
  const std::size_t m = c.size();
  if (mv.row >= m || mv.x >= m || mv.y >= m)
    throw Error(ErrorKind::UnknownState, "g+ move refers to a state outside the poset");
  if (!(mv.kappa >= 0.0)) throw Error(ErrorKind::InvalidArgument, "kappa must be non-negative");
  if (p.comparable(mv.x, mv.y))
    throw Error(ErrorKind::IncomparableRequired,
                p.label(mv.x) + " and " + p.label(mv.y) + " are comparable",
                {{"x", p.label(mv.x)}, {"y", p.label(mv.y)}});
  auto mj = meet_join(p, mv.x, mv.y);
  if (!mj || (!p.is_cube() && !is_lattice(p)))
    throw Error(ErrorKind::NotLattice, "g+ transform needs a lattice state space");
  const auto r = static_cast<Eigen::Index>(mv.row);
  for (std::size_t z : {mv.x, mv.y})
    if (c.P(r, static_cast<Eigen::Index>(z)) < mv.kappa)
      throw Error(ErrorKind::InsufficientMass,
                  "row " + p.label(mv.row) + " has mass " +
                      format_real(c.P(r, static_cast<Eigen::Index>(z))) + " at " + p.label(z) +
                      ", less than kappa " + format_real(mv.kappa),
                  {{"row", p.label(mv.row)}, {"state", p.label(z)}});
  Chain out = c;
  out.P(r, static_cast<Eigen::Index>(mv.x)) -= mv.kappa;
  out.P(r, static_cast<Eigen::Index>(mv.y)) -= mv.kappa;
  out.P(r, static_cast<Eigen::Index>(mj->first)) += mv.kappa;
  out.P(r, static_cast<Eigen::Index>(mj->second)) += mv.kappa;
  out.exact.reset();
  return out;
}

/// Moves along the axis e_1 = e_d of the d-cube: rows with e_1 = e_d = 0
/// push mass from e+s_1, e+s_d to e and e+s_1+s_d; rows with e_1 = e_d = 1
/// push mass from e-s_1, e-s_d to e-s_1-s_d and e. For d = 3 these are
/// the rows 000, 010, 101, 111.
inline std::vector<GPlusMove> symmetric_axis_moves(const Poset& cube, double kappa) {
  if (!cube.is_cube() || *cube.cube_dimension() < 2)
    throw Error(ErrorKind::InvalidArgument, "axis moves need a cube of dimension >= 2");
  const unsigned d = *cube.cube_dimension();
  const std::uint32_t first = 1u, last = 1u << (d - 1);
  std::vector<GPlusMove> moves;
  for (std::size_t s = 0; s < cube.size(); ++s) {
    const std::uint32_t e = cube.cube_mask(s);
    const bool a = e & first, b = e & last;
    if (a != b) continue;
    GPlusMove mv;
    mv.row = s;
    mv.kappa = kappa;
    if (!a) {
      mv.x = cube.index_of_mask(e | first);
      mv.y = cube.index_of_mask(e | last);
    } else {
      mv.x = cube.index_of_mask(e & ~first);
      mv.y = cube.index_of_mask(e & ~last);
    }
    moves.push_back(mv);
  }
  return moves;
}

/// Nearest-neighbour walk with every symmetric-axis row g+ transformed.
inline Chain gplus_walk(const CubeWalkParams& p, double kappa) {
  Chain c = nearest_neighbor_walk(p);
  for (const auto& mv : symmetric_axis_moves(c.poset, kappa)) c = gplus_transform(c, mv);
  return c;
}

// Pair-check slack; it absorbs rounding in sums of modular terms.
inline constexpr double kSupermodularSlack = 1e-12;

/// Largest violation of f(x^y) + f(xvy) >= f(x) + f(y) over all pairs
/// (0 when f is supermodular).
inline double supermodularity_defect(const Poset& p, const RowVector& f) {
  double worst = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = x + 1; y < p.size(); ++y) {
      if (p.comparable(x, y)) continue;
      auto mj = meet_join(p, x, y);
      if (!mj) throw Error(ErrorKind::NotLattice, "supermodularity needs a lattice");
      auto at = [&](std::size_t i) { return f(static_cast<Eigen::Index>(i)); };
      worst = std::max(worst, at(x) + at(y) - at(mj->first) - at(mj->second));
    }
  return worst;
}

/// Random supermodular function. On cubes: a signed modular part plus
/// non-negative products of non-decreasing coordinate functions; on other
/// lattices: non-negative combinations of the indicators 1{a <= e} and
/// 1{e <= a}. A small random perturbation is added and halved until the
/// exhaustive pair check passes (and dropped if it never does).
inline RowVector random_supermodular(const Poset& p, std::mt19937_64& rng,
                                     std::size_t* repairs = nullptr) {
  std::uniform_real_distribution<double> unit(0.0, 1.0), sym(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const auto m = static_cast<Eigen::Index>(p.size());
  RowVector f = RowVector::Constant(m, sym(rng));
  if (p.is_cube()) {
    const unsigned d = *p.cube_dimension();
    for (unsigned i = 0; i < d; ++i) {
      const double a = sym(rng);
      for (Eigen::Index s = 0; s < m; ++s)
        if ((p.cube_mask(static_cast<std::size_t>(s)) >> i) & 1u) f(s) += a;
    }
    const unsigned terms = 1 + static_cast<unsigned>(unit(rng) * 2 * d);
    for (unsigned t = 0; t < terms; ++t) {
      std::vector<std::pair<double, double>> h(d);  // (h(0), h(1) - h(0)) per coordinate
      std::vector<bool> used(d);
      unsigned count = 0;
      for (unsigned i = 0; i < d; ++i) {
        used[i] = coin(rng);
        count += used[i];
        h[i] = {unit(rng), unit(rng)};
      }
      if (count < 2) continue;
      const double w = unit(rng);
      for (Eigen::Index s = 0; s < m; ++s) {
        double prod = w;
        for (unsigned i = 0; i < d; ++i)
          if (used[i])
            prod *= h[i].first + ((p.cube_mask(static_cast<std::size_t>(s)) >> i) & 1u ? h[i].second
                                                                                   : 0.0);
        f(s) += prod;
      }
    }
  } else {
    for (Eigen::Index a = 0; a < m; ++a) {
      const double up = coin(rng) ? unit(rng) : 0.0, down = coin(rng) ? unit(rng) : 0.0;
      for (Eigen::Index s = 0; s < m; ++s) {
        if (p.leq(static_cast<std::size_t>(a), static_cast<std::size_t>(s))) f(s) += up;
        if (p.leq(static_cast<std::size_t>(s), static_cast<std::size_t>(a))) f(s) += down;
      }
    }
  }
  RowVector noise(m);
  for (Eigen::Index s = 0; s < m; ++s) noise(s) = 0.05 * sym(rng);
  for (int attempt = 0; attempt < 12; ++attempt) {
    if (supermodularity_defect(p, f + noise) <= kSupermodularSlack) return f + noise;
    noise *= 0.5;
    if (repairs) ++*repairs;
  }
  return f;
}

struct SupermodularReport {
  double min_difference = 0.0;  // min over trials of E f(P2) - E f(P1)
  std::size_t argmin_trial = 0;
  std::size_t trials = 0;
  std::size_t repairs = 0;
  double max_defect = 0.0;  // of the generated functions
};

/// Probes P1 <=_sm P2 with `trials` random verified-supermodular functions.
inline SupermodularReport supermodular_order_witness(const Poset& p, const RowVector& p1_row,
                                                     const RowVector& p2_row, std::size_t trials,
                                                     std::uint64_t seed) {
  require_size(static_cast<std::size_t>(p1_row.size()), p.size(), "first distribution");
  require_size(static_cast<std::size_t>(p2_row.size()), p.size(), "second distribution");
  if (!p.is_cube() && !is_lattice(p))
    throw Error(ErrorKind::NotLattice, "supermodular order needs a lattice state space");
  std::mt19937_64 rng(seed);
  SupermodularReport r;
  r.trials = trials;
  r.min_difference = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trials; ++t) {
    RowVector f = random_supermodular(p, rng, &r.repairs);
    double defect = supermodularity_defect(p, f);
    r.max_defect = std::max(r.max_defect, defect);
    if (defect > kSupermodularSlack)
      throw Error(ErrorKind::NumericalFailure, "generated function failed the supermodular check");
    double diff = p2_row.dot(f) - p1_row.dot(f);
    if (diff < r.min_difference) {
      r.min_difference = diff;
      r.argmin_trial = t;
    }
  }
  if (trials == 0) r.min_difference = 0.0;
  return r;
}

}  // namespace mobius
