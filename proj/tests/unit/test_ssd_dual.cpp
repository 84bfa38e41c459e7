#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace mobius;
namespace ts = testing_support;

namespace {

DualChain dual_of(const Chain& c, Direction dir, const DualOptions& o = {}) {
  StationaryLaw law = stationary(c);
  return build_ssd(c, law, zeta_mobius(c.poset), dir, o);
}

}  // namespace

TEST_CASE("symmetric 2-cube dual", "[ssd_dual]") {
  Chain c = nearest_neighbor_walk(symmetric_walk(2, 0.2));
  DualChain d = dual_of(c, Direction::down);
  RowVector H(4);
  H << 0.25, 0.5, 0.5, 1.0;
  CHECK(ts::max_abs(d.link.H - H) <= 1e-14);
  Matrix want(4, 4);
  want << 0.2, 0.4, 0.4, 0,
          0, 0.6, 0, 0.4,
          0, 0, 0.6, 0.4,
          0, 0, 0, 1;
  CHECK(ts::max_abs(d.P_star - want) <= 1e-14);
  CHECK(d.nu_star(0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(d.absorbing_index == 3);
  CHECK_FALSE(d.forced);
}

TEST_CASE("cube dual closed forms", "[ssd_dual]") {
  std::mt19937_64 rng(7);
  for (unsigned d = 1; d <= 6; ++d) {
    auto p = ts::random_admissible(d, rng);
    Chain c = nearest_neighbor_walk(p);
    DualChain dual = dual_of(c, Direction::down);
    const auto& q = c.poset;
    double worst = 0.0;
    for (std::size_t s = 0; s < q.size(); ++s)
      for (std::size_t t = 0; t < q.size(); ++t) {
        std::uint32_t e = q.cube_mask(s), f = q.cube_mask(t);
        double want = 0.0;
        if (s == t) {
          want = 1.0;
          for (unsigned i = 0; i < d; ++i)
            if (!((e >> i) & 1u)) want -= p.alpha[i] + p.beta[i];
        } else if ((f & e) == e && std::popcount(f ^ e) == 1) {
          unsigned i = static_cast<unsigned>(std::countr_zero(f ^ e));
          want = p.alpha[i] + p.beta[i];
        }
        worst = std::max(worst, std::abs(dual.P_star(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) - want));
      }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("dual kernel matches Lambda P Lambda^{-1} on random lattice chains", "[ssd_dual]") {
  std::mt19937_64 rng(17);
  for (const Poset& p : {ts::diamond(), ts::pentagon(), ts::m3(), ts::square_times_chain(), cube_poset(3), ts::linear(5)}) {
    for (Direction dir : {Direction::down, Direction::up}) {
      for (int t = 0; t < 3; ++t) {
        Chain c = ts::random_dual_admissible_chain(p, dir, rng);
        StationaryLaw law = stationary(c);
        DualChain d = build_ssd(c, law, zeta_mobius(p), dir);
        CHECK(ts::max_abs(d.P_star - ts::oracle_dual_kernel(p, c.P, law.pi, dir)) <= 1e-9);
        CHECK(d.residuals.nu <= 1e-10);
        CHECK(d.residuals.intertwining <= 1e-10);
        CHECK(d.residuals.row_sum <= 1e-10);
        CHECK(d.P_star.minCoeff() >= 0.0);
        CHECK(d.nu_star.minCoeff() >= 0.0);
        CHECK(d.P_star(static_cast<Eigen::Index>(d.absorbing_index), static_cast<Eigen::Index>(d.absorbing_index)) ==
              Catch::Approx(1.0).margin(1e-12));
        // link row of the absorbing state is pi
        CHECK(ts::max_abs(d.link.Lambda.row(static_cast<Eigen::Index>(d.absorbing_index)) - law.pi) <= 1e-14);
        CHECK(ts::max_abs(d.link.Lambda.rowwise().sum().transpose() - RowVector::Ones(law.pi.size())) <= 1e-12);
      }
    }
  }
}

TEST_CASE("down dual never moves to a strictly smaller state on cubes", "[ssd_dual]") {
  std::mt19937_64 rng(23);
  for (unsigned d = 2; d <= 5; ++d) {
    Chain c = nearest_neighbor_walk(ts::random_admissible(d, rng));
    DualChain dual = dual_of(c, Direction::down);
    for (Eigen::Index i = 0; i < dual.P_star.rows(); ++i)
      for (Eigen::Index j = 0; j < i; ++j) CHECK(std::abs(dual.P_star(i, j)) <= 1e-12);
  }
}

TEST_CASE("up dual of a cube walk absorbs at the bottom", "[ssd_dual]") {
  Chain c = nearest_neighbor_walk(symmetric_walk(3, 0.1));
  c.nu = point_mass(c.size(), c.size() - 1);
  DualChain d = dual_of(c, Direction::up);
  CHECK(d.absorbing_index == 0);
  CHECK(d.residuals.intertwining <= 1e-12);
  CHECK(d.P_star(0, 0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("failed preconditions throw unless forced", "[ssd_dual]") {
  Chain c = nearest_neighbor_walk(symmetric_walk(2, 0.3));  // total rate 1.2
  try {
    dual_of(c, Direction::down);
    FAIL("dual built");
  } catch (const PreconditionError& e) {
    CHECK(e.kind() == ErrorKind::PreconditionFailed);
    REQUIRE(e.reports().size() == 2);
    CHECK_FALSE(e.reports()[1].verdict);
  }
  DualOptions o;
  o.force = true;
  DualChain d = dual_of(c, Direction::down, o);
  CHECK(d.forced);
  CHECK(d.P_star.minCoeff() < 0.0);
  CHECK(d.residuals.intertwining <= 1e-10);
}

TEST_CASE("start law whose g is not monotone is rejected", "[ssd_dual]") {
  Chain c = nearest_neighbor_walk(symmetric_walk(2, 0.2));
  c.nu = point_mass(4, 1);
  CHECK_THROWS_AS(dual_of(c, Direction::down), PreconditionError);
}

TEST_CASE("missing unique extremal state", "[ssd_dual]") {
  Poset p = ts::fence();
  Matrix P = Matrix::Constant(4, 4, 0.25);
  Chain c = validate_chain(P, p, point_mass(4, 0));
  try {
    dual_of(c, Direction::down);
    FAIL("dual built");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoUniqueExtremalState);
  }
}

TEST_CASE("two-state linear dual", "[ssd_dual]") {
  const double a = 0.3, b = 0.15;
  Matrix P(2, 2);
  P << 1 - a, a, b, 1 - b;
  Chain c = validate_chain(P, ts::linear(2), point_mass(2, 0));
  StationaryLaw law = stationary(c);
  DualChain d = build_ssd_linear(c, law, Direction::down);
  CHECK(d.P_star(0, 1) == Catch::Approx(a + b).margin(1e-14));
  CHECK(d.P_star(1, 1) == Catch::Approx(1.0).margin(1e-14));
  CHECK(d.nu_star(0) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("linear formulas agree with the general construction", "[ssd_dual]") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index m = 2 + t % 6;
    Matrix P = ts::random_birth_death(m, rng, 0.45);
    for (Direction dir : {Direction::down, Direction::up}) {
      Chain c = validate_chain(P, ts::linear(static_cast<std::size_t>(m)),
                               point_mass(static_cast<std::size_t>(m), dir == Direction::down ? 0 : m - 1));
      StationaryLaw law = stationary(c);
      DualChain lin = build_ssd_linear(c, law, dir);
      CHECK(ts::max_abs(lin.P_star - ts::oracle_dual_kernel(c.poset, P, law.pi, dir)) <= 1e-9);
    }
  }
}

TEST_CASE("linear dual requires a total order", "[ssd_dual]") {
  Chain c = nearest_neighbor_walk(symmetric_walk(2, 0.2));
  try {
    build_ssd_linear(c, stationary(c), Direction::down);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotTotalOrder);
  }
}
