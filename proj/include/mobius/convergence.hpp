#pragma once

// Separation distance, absorption-time law of a dual, the strong stationary
// time bound, closed forms for cube walks, and Monte Carlo of T*.

#include "mobius/chain.hpp"
#include "mobius/core.hpp"
#include "mobius/ssd_dual.hpp"

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace mobius {

inline constexpr std::size_t kDefaultHorizon = 200;
// Guard on horizon * states for curve storage and iteration.
inline constexpr std::size_t kMaxHorizonWork = std::size_t{1} << 32;
inline constexpr std::size_t kMaxHorizon = std::size_t{1} << 24;

struct SeparationCurve {
  std::vector<double> values;  // s(nu P^n, pi), n = 0..horizon
  std::size_t horizon = 0;
  // n at which s(n) exceeded s(n-1) by more than 1e-12
  std::vector<std::size_t> increases;
};

struct AbsorptionLaw {
  std::vector<double> tail;  // P(T* > n), n = 0..horizon
  double mean = 0.0;
};

namespace detail {

inline void check_horizon(std::size_t horizon, std::size_t states) {
  if (horizon > kMaxHorizon || (horizon + 1) * std::max<std::size_t>(states, 1) > kMaxHorizonWork)
    throw Error(ErrorKind::HorizonTooLarge,
                "horizon " + std::to_string(horizon) + " is too large for " +
                    std::to_string(states) + " states",
                {{"horizon", std::to_string(horizon)}});
}

inline double separation(const RowVector& law, const RowVector& pi) {
  double s = 0.0;
  for (Eigen::Index e = 0; e < law.size(); ++e) s = std::max(s, 1.0 - law(e) / pi(e));
  return s;
}

}  // namespace detail

/// s(nu P^n, pi) for n = 0..horizon. With `stop_below > 0` iteration stops
/// once s drops under it and the remaining values are reported as 0.
inline SeparationCurve separation_curve(const Chain& c, const StationaryLaw& law,
                                        std::size_t horizon, double stop_below = 0.0) {
  if (!c.nu) throw Error(ErrorKind::InvalidArgument, "separation_curve needs an initial law");
  detail::check_horizon(horizon, c.size());
  SeparationCurve out;
  out.horizon = horizon;
  out.values.assign(horizon + 1, 0.0);
  RowVector mu = *c.nu;
  for (std::size_t n = 0; n <= horizon; ++n) {
    if (n > 0) mu = mu * c.P;
    double s = detail::separation(mu, law.pi);
    out.values[n] = s;
    if (n > 0 && s > out.values[n - 1] + 1e-12) out.increases.push_back(n);
    if (stop_below > 0.0 && s < stop_below) break;
  }
  return out;
}

/// Law of the absorption time of a dual: tail(n) = nu*_T Q^n 1 over the
/// transient block Q, mean = nu*_T (I - Q)^{-1} 1.
inline AbsorptionLaw absorption_tail(const DualChain& d, std::size_t horizon) {
  const auto m = static_cast<Eigen::Index>(d.P_star.rows());
  detail::check_horizon(horizon, static_cast<std::size_t>(m));
  const auto a = static_cast<Eigen::Index>(d.absorbing_index);
  std::vector<Eigen::Index> transient;
  for (Eigen::Index i = 0; i < m; ++i)
    if (i != a) transient.push_back(i);
  const auto t = static_cast<Eigen::Index>(transient.size());
  Matrix Q(t, t);
  RowVector start(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    start(i) = d.nu_star(transient[i]);
    for (Eigen::Index j = 0; j < t; ++j) Q(i, j) = d.P_star(transient[i], transient[j]);
  }
  AbsorptionLaw out;
  out.tail.assign(horizon + 1, 0.0);
  if (t == 0) return out;
  RowVector mu = start;
  for (std::size_t n = 0; n <= horizon; ++n) {
    if (n > 0) mu = mu * Q;
    out.tail[n] = std::max(0.0, mu.sum());
  }
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(t, t) - Q);
  if (!lu.isInvertible())
    throw Error(ErrorKind::SingularFundamentalMatrix,
                "I - Q is singular: the dual has a second closed class");
  ColVector fundamental = lu.solve(ColVector::Ones(t));
  out.mean = start * fundamental;
  if (!std::isfinite(out.mean) || fundamental.minCoeff() < 0.0)
    throw Error(ErrorKind::SingularFundamentalMatrix,
                "fundamental matrix is ill-conditioned; mean absorption time " +
                    format_real(out.mean));
  return out;
}

struct SstReport {
  bool holds = true;             // s(n) <= tail(n) + tol for every n
  double max_violation = 0.0;    // max(s(n) - tail(n)), clipped at 0
  bool equality = true;          // |s(n) - tail(n)| <= tol for every n
  double max_gap = 0.0;          // max |s(n) - tail(n)|
  std::size_t worst_n = 0;
};

inline SstReport sst_bound_check(const SeparationCurve& s, const AbsorptionLaw& a,
                                 double tol = 1e-10) {
  require_size(a.tail.size(), s.values.size(), "sst_bound_check horizon");
  SstReport r;
  for (std::size_t n = 0; n < s.values.size(); ++n) {
    double diff = s.values[n] - a.tail[n];
    if (diff > r.max_violation) {
      r.max_violation = diff;
      r.worst_n = n;
    }
    r.max_gap = std::max(r.max_gap, std::abs(diff));
  }
  r.holds = r.max_violation <= tol;
  r.equality = r.max_gap <= tol;
  return r;
}

namespace detail {

inline void check_cube_rates(const std::vector<double>& alpha, const std::vector<double>& beta) {
  if (alpha.size() != beta.size())
    throw Error(ErrorKind::DimensionMismatch, "alpha and beta have different lengths");
  if (alpha.empty() || alpha.size() > kMaxCubeDimension)
    throw Error(ErrorKind::DimensionTooLarge,
                "cube dimension must lie in 1.." + std::to_string(kMaxCubeDimension),
                {{"d", std::to_string(alpha.size())}});
}

/// Visits (sign parity, s_gamma) for every subset gamma in Gray-code order.
inline void for_each_subset_rate(const std::vector<double>& alpha, const std::vector<double>& beta,
                                 const std::function<void(std::uint32_t, double)>& visit) {
  const auto d = static_cast<unsigned>(alpha.size());
  std::uint32_t gamma = 0;
  for (std::uint64_t k = 0; k < (std::uint64_t{1} << d); ++k) {
    if (k > 0) gamma ^= 1u << std::countr_zero(k);
    double s = 0.0;
    for (unsigned i = 0; i < d; ++i)
      if ((gamma >> i) & 1u) s += alpha[i] + beta[i];
    visit(gamma, s);
  }
}

}  // namespace detail

/// sum_{k=1}^d (-1)^{k-1} sum_{|gamma|=k} (1 - s_gamma)^n for n = 0..horizon.
inline std::vector<double> cube_separation_curve(const std::vector<double>& alpha,
                                                 const std::vector<double>& beta,
                                                 std::size_t horizon) {
  detail::check_cube_rates(alpha, beta);
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) total += alpha[i] + beta[i];
  if (total > 1.0)
    throw Error(ErrorKind::PreconditionFailed,
                "inclusion-exclusion formula needs sum(alpha + beta) <= 1, got " +
                    format_real(total),
                {{"sum", format_real(total)}});
  detail::check_horizon(horizon, std::size_t{1} << alpha.size());
  std::vector<double> out(horizon + 1, 0.0);
  detail::for_each_subset_rate(alpha, beta, [&](std::uint32_t gamma, double s) {
    if (gamma == 0) return;
    double sign = std::popcount(gamma) % 2 == 1 ? 1.0 : -1.0;
    double base = 1.0 - s, power = 1.0;
    for (std::size_t n = 0; n <= horizon; ++n) {
      out[n] += sign * power;
      power *= base;
    }
  });
  return out;
}

inline double cube_separation_formula(const std::vector<double>& alpha,
                                      const std::vector<double>& beta, std::size_t n) {
  detail::check_cube_rates(alpha, beta);
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) total += alpha[i] + beta[i];
  if (total > 1.0)
    throw Error(ErrorKind::PreconditionFailed,
                "inclusion-exclusion formula needs sum(alpha + beta) <= 1, got " +
                    format_real(total),
                {{"sum", format_real(total)}});
  double acc = 0.0;
  detail::for_each_subset_rate(alpha, beta, [&](std::uint32_t gamma, double s) {
    if (gamma == 0) return;
    double sign = std::popcount(gamma) % 2 == 1 ? 1.0 : -1.0;
    acc += sign * std::pow(1.0 - s, static_cast<double>(n));
  });
  return acc;
}

/// {1 - s_gamma : gamma subset of 1..d}, sorted descending.
inline std::vector<double> cube_eigenvalues(const std::vector<double>& alpha,
                                            const std::vector<double>& beta) {
  detail::check_cube_rates(alpha, beta);
  std::vector<double> out;
  out.reserve(std::size_t{1} << alpha.size());
  detail::for_each_subset_rate(alpha, beta,
                               [&](std::uint32_t, double s) { out.push_back(1.0 - s); });
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

struct EmpiricalTail {
  std::vector<double> tail;  // fraction of samples with T* > n
  std::vector<double> lo;    // Clopper-Pearson band
  std::vector<double> hi;
  std::vector<std::uint64_t> counts;
  double mean = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t censored = 0;  // runs cut off at max_steps
};

struct SimulationOptions {
  std::size_t horizon = 50;
  unsigned shards = 1;
  double confidence = 0.99;
  std::uint64_t max_steps = 10'000'000;
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t sample_index(const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

inline std::vector<double> cumulative(const RowVector& row) {
  std::vector<double> c(static_cast<std::size_t>(row.size()));
  double acc = 0.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) c[static_cast<std::size_t>(j)] = (acc += row(j));
  for (auto& v : c) v /= acc;
  return c;
}

struct ShardResult {
  std::vector<std::uint64_t> above;  // above[n] = #{T* > n}
  long double time_sum = 0.0L;
  std::uint64_t censored = 0;
};

}  // namespace detail

/// Simulates the absorption time of the dual `samples` times. Shard k uses
/// a generator seeded from (seed, k); shard results are merged in shard
/// order, so output depends only on (seed, samples, shards).
inline EmpiricalTail simulate_absorption(const DualChain& d, std::uint64_t samples,
                                         std::uint64_t seed, const SimulationOptions& opts = {}) {
  if (samples == 0) throw Error(ErrorKind::InvalidArgument, "samples must be at least 1");
  const std::size_t m = static_cast<std::size_t>(d.P_star.rows());
  std::vector<std::vector<double>> rows(m);
  for (std::size_t i = 0; i < m; ++i) rows[i] = detail::cumulative(d.P_star.row(i));
  const std::vector<double> start = detail::cumulative(d.nu_star);
  const std::size_t horizon = opts.horizon;
  const unsigned shards = std::max(1u, opts.shards);

  std::vector<detail::ShardResult> results(shards);
  auto run_shard = [&](unsigned k) {
    std::seed_seq sequence{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(sequence);
    std::uint64_t mine = samples / shards + (k < samples % shards ? 1 : 0);
    auto& r = results[k];
    r.above.assign(horizon + 1, 0);
    for (std::uint64_t s = 0; s < mine; ++s) {
      std::size_t state = detail::sample_index(start, detail::uniform01(rng));
      std::uint64_t t = 0;
      while (state != d.absorbing_index && t < opts.max_steps) {
        state = detail::sample_index(rows[state], detail::uniform01(rng));
        ++t;
      }
      if (state != d.absorbing_index) ++r.censored;
      r.time_sum += static_cast<long double>(t);
      for (std::uint64_t n = 0; n < std::min<std::uint64_t>(t, horizon + 1); ++n) ++r.above[n];
    }
  };
  if (shards == 1) {
    run_shard(0);
  } else {
    std::vector<std::thread> workers;
    for (unsigned k = 0; k < shards; ++k) workers.emplace_back(run_shard, k);
    for (auto& w : workers) w.join();
  }

  EmpiricalTail out;
  out.samples = samples;
  out.counts.assign(horizon + 1, 0);
  long double time_sum = 0.0L;
  for (const auto& r : results) {
    for (std::size_t n = 0; n <= horizon; ++n) out.counts[n] += r.above[n];
    time_sum += r.time_sum;
    out.censored += r.censored;
  }
  out.mean = static_cast<double>(time_sum / static_cast<long double>(samples));
  const double alpha = 1.0 - opts.confidence;
  const auto N = static_cast<double>(samples);
  out.tail.resize(horizon + 1);
  out.lo.resize(horizon + 1);
  out.hi.resize(horizon + 1);
  for (std::size_t n = 0; n <= horizon; ++n) {
    const auto k = static_cast<double>(out.counts[n]);
    out.tail[n] = k / N;
    out.lo[n] = k == 0 ? 0.0
                       : boost::math::quantile(boost::math::beta_distribution<>(k, N - k + 1),
                                               alpha / 2);
    out.hi[n] = k == N ? 1.0
                       : boost::math::quantile(boost::math::beta_distribution<>(k + 1, N - k),
                                               1 - alpha / 2);
  }
  return out;
}

}  // namespace mobius
