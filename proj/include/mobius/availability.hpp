#pragma once

// Availability process of an unreliable network on the subsets D of the
// node set J = {1..d} (D = nodes currently down). Breakdowns D -> D u I
// occur at rate psi(D u I)/psi(D), repairs D -> D \ H at phi(D)/phi(D \ H).
// Node i corresponds to bit i-1, so states live on the d-cube.

#include "mobius/chain.hpp"
#include "mobius/convergence.hpp"
#include "mobius/core.hpp"
#include "mobius/cube_models.hpp"
#include "mobius/monotonicity.hpp"
#include "mobius/poset.hpp"
#include "mobius/ssd_dual.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mobius {

inline constexpr unsigned kMaxAvailabilityNodes = 14;

/// psi and phi as tables indexed by subset bitmask (size 2^d).
struct RateFunctions {
  unsigned d = 0;
  std::vector<double> psi;
  std::vector<double> phi;
};

/// One rate function given either as a parametric family or a table.
/// Table entries override family values.
struct RateSpec {
  enum class Family { none, product, geometric };
  Family family = Family::none;
  std::vector<double> params;  // product: per-node factors
  double base = 1.0;           // geometric: c^{|D|}
  std::map<std::uint32_t, double> table;
};

inline std::vector<double> resolve_rate(const RateSpec& spec, unsigned d, const char* name) {
  const std::uint32_t m = 1u << d;
  std::vector<double> out(m, std::nan(""));
  if (spec.family == RateSpec::Family::product) {
    require_size(spec.params.size(), d, std::string(name) + " product parameters");
    for (std::uint32_t D = 0; D < m; ++D) {
      double v = 1.0;
      for (unsigned i = 0; i < d; ++i)
        if ((D >> i) & 1u) v *= spec.params[i];
      out[D] = v;
    }
  } else if (spec.family == RateSpec::Family::geometric) {
    for (std::uint32_t D = 0; D < m; ++D) out[D] = std::pow(spec.base, std::popcount(D));
  }
  for (auto [D, v] : spec.table) {
    if (D >= m)
      throw Error(ErrorKind::InvalidArgument,
                  std::string(name) + " table key " + std::to_string(D) + " is not a subset of J");
    out[D] = v;
  }
  for (std::uint32_t D = 0; D < m; ++D)
    if (std::isnan(out[D]))
      throw Error(ErrorKind::MissingSubsetValue,
                  std::string(name) + " is undefined on subset " + std::to_string(D),
                  {{"function", name}, {"subset", std::to_string(D)}});
  return out;
}

inline RateFunctions make_rates(unsigned d, const RateSpec& psi, const RateSpec& phi) {
  if (d == 0 || d > kMaxAvailabilityNodes)
    throw Error(ErrorKind::DimensionTooLarge,
                "availability models support 1.." + std::to_string(kMaxAvailabilityNodes) +
                    " nodes",
                {{"d", std::to_string(d)}});
  return {d, resolve_rate(psi, d, "psi"), resolve_rate(phi, d, "phi")};
}

inline void validate_rates(const RateFunctions& r) {
  if (r.d == 0 || r.d > kMaxAvailabilityNodes)
    throw Error(ErrorKind::DimensionTooLarge,
                "availability models support 1.." + std::to_string(kMaxAvailabilityNodes) +
                    " nodes",
                {{"d", std::to_string(r.d)}});
  const std::size_t m = std::size_t{1} << r.d;
  for (const auto* f : {&r.psi, &r.phi}) {
    const char* name = f == &r.psi ? "psi" : "phi";
    if (f->size() != m)
      throw Error(ErrorKind::MissingSubsetValue,
                  std::string(name) + " must be given on all " + std::to_string(m) + " subsets",
                  {{"function", name}});
    for (std::size_t D = 0; D < m; ++D)
      if (!((*f)[D] > 0.0) || !std::isfinite((*f)[D]))
        throw Error(ErrorKind::InvalidArgument,
                    std::string(name) + " must be positive; subset " + std::to_string(D) +
                        " has " + format_real((*f)[D]),
                    {{"function", name}, {"subset", std::to_string(D)}});
  }
}

struct Generator {
  Poset poset;  // the d-cube; state index follows its enumeration
  Matrix Q;
};

/// Q(D, D u I) = psi(D u I)/psi(D), Q(D, D \ H) = phi(D)/phi(D \ H) for
/// nonempty I, H with |I|, |H| <= max_group (0 means no limit).
inline Generator availability_generator(const RateFunctions& r, unsigned max_group = 0) {
  validate_rates(r);
  Generator g{cube_poset(r.d), {}};
  const std::uint32_t full = (1u << r.d) - 1;
  const auto n = static_cast<Eigen::Index>(g.poset.size());
  g.Q = Matrix::Zero(n, n);
  auto allowed = [&](std::uint32_t moved) {
    return max_group == 0 || static_cast<unsigned>(std::popcount(moved)) <= max_group;
  };
  for (Eigen::Index s = 0; s < n; ++s) {
    const std::uint32_t D = g.poset.cube_mask(static_cast<std::size_t>(s));
    const std::uint32_t up = full & ~D;
    // nonempty subsets I of J \ D
    for (std::uint32_t I = up; I != 0; I = (I - 1) & up)
      if (allowed(I))
        g.Q(s, static_cast<Eigen::Index>(g.poset.index_of_mask(D | I))) = r.psi[D | I] / r.psi[D];
    for (std::uint32_t H = D; H != 0; H = (H - 1) & D)
      if (allowed(H))
        g.Q(s, static_cast<Eigen::Index>(g.poset.index_of_mask(D & ~H))) = r.phi[D] / r.phi[D & ~H];
    g.Q(s, s) = -g.Q.row(s).sum();
  }
  return g;
}

struct Uniformized {
  Chain chain;
  double rate = 0.0;  // Lambda_u; one step of the chain is 1/rate time units
};

/// P = I + Q / Lambda_u with Lambda_u = multiplier * max |Q(D,D)|.
inline Uniformized uniformize(const Generator& g, double multiplier = 1.05) {
  if (!(multiplier >= 1.0))
    throw Error(ErrorKind::InvalidArgument,
                "uniformization multiplier must be >= 1, got " + format_real(multiplier));
  const double top = (-g.Q.diagonal()).maxCoeff();
  if (!(top > 0.0)) throw Error(ErrorKind::ZeroGenerator, "generator has no transitions");
  Uniformized u;
  u.rate = multiplier * top;
  const auto n = g.Q.rows();
  Matrix P = Matrix::Identity(n, n) + g.Q / u.rate;
  // Fix the diagonal so each row sums to one to working precision.
  for (Eigen::Index i = 0; i < n; ++i) P(i, i) = 1.0 - (P.row(i).sum() - P(i, i));
  u.chain = validate_chain(std::move(P), g.poset, point_mass(static_cast<std::size_t>(n), 0));
  return u;
}

struct PipelineOptions {
  double multiplier = 1.05;
  unsigned max_group = 0;
  Direction direction = Direction::down;
  std::size_t horizon = kDefaultHorizon;
  double stop_below = 0.0;
  MonotonicityOptions monotonicity;
  Tolerances tolerances;
};

struct AvailabilityReport {
  Generator generator;
  Uniformized uniformized;
  StationaryLaw law;
  double generator_residual = 0.0;  // max |pi Q|
  MonotonicityReport mobius_down;
  MonotonicityReport mobius_up;
  MonotonicityReport reversed;     // reversed kernel, pipeline direction
  MonotonicityReport g_function;   // g = nu / pi, pipeline direction
  bool admissible = false;
  std::string stopped_at;          // empty when the pipeline ran to the end
  std::optional<DualChain> dual;
  std::optional<SeparationCurve> separation;
  std::optional<AbsorptionLaw> absorption;
  std::optional<SstReport> sst;
};

namespace detail {

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PreconditionError&) {
    throw;
  } catch (const Error& e) {
    auto details = e.details();
    details.emplace_back("stage", stage);
    throw Error(e.kind(), std::string(stage) + ": " + e.what(), std::move(details));
  }
}

}  // namespace detail

/// generator -> uniformization -> stationary law -> monotonicity ->
/// dual -> separation and absorption curves. The chain starts with every
/// node up (D = {}). A failed monotonicity check ends the pipeline there;
/// the report then carries the verdicts and no dual.
inline AvailabilityReport availability_pipeline(const RateFunctions& r,
                                                const PipelineOptions& opts = {}) {
  AvailabilityReport rep;
  rep.generator = detail::staged("generator", [&] { return availability_generator(r, opts.max_group); });
  rep.uniformized = detail::staged("uniformize", [&] { return uniformize(rep.generator, opts.multiplier); });
  const Chain& c = rep.uniformized.chain;
  rep.law = detail::staged("stationary", [&] { return stationary(c); });
  rep.generator_residual = (rep.law.pi * rep.generator.Q).cwiseAbs().maxCoeff();
  ZetaMobius zm = zeta_mobius(c.poset);
  detail::staged("monotonicity", [&] {
    rep.mobius_down = mobius_monotone(c.P, zm, Direction::down, opts.monotonicity);
    rep.mobius_up = mobius_monotone(c.P, zm, Direction::up, opts.monotonicity);
    Chain rev = reverse(c, rep.law, opts.tolerances);
    rep.reversed = mobius_monotone(rev.P, zm, opts.direction, opts.monotonicity);
    rep.g_function = function_mobius_monotone(c.nu->cwiseQuotient(rep.law.pi), zm, opts.direction,
                                              opts.monotonicity);
    return 0;
  });
  rep.admissible = rep.reversed.verdict && rep.g_function.verdict;
  if (!rep.admissible) {
    rep.stopped_at = "monotonicity";
    return rep;
  }
  DualOptions dopts;
  dopts.monotonicity = opts.monotonicity;
  dopts.tolerances = opts.tolerances;
  rep.dual = detail::staged("dual", [&] { return build_ssd(c, rep.law, zm, opts.direction, dopts); });
  detail::staged("convergence", [&] {
    rep.separation = separation_curve(c, rep.law, opts.horizon, opts.stop_below);
    rep.absorption = absorption_tail(*rep.dual, opts.horizon);
    rep.sst = sst_bound_check(*rep.separation, *rep.absorption, opts.tolerances.identity);
    return 0;
  });
  return rep;
}

}  // namespace mobius
