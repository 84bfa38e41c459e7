#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace mobius;
namespace ts = testing_support;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IOError;
}

}  // namespace

TEST_CASE("nearest neighbour walk entries", "[cube_models]") {
  CubeWalkParams p{3, {0.1, 0.2, 0.05}, {0.15, 0.1, 0.2}};
  Chain c = nearest_neighbor_walk(p);
  const Poset& q = c.poset;
  auto at = [&](const char* a, const char* b) { return c.P(q.index_of(a), q.index_of(b)); };
  CHECK(at("000", "100") == 0.1);
  CHECK(at("000", "010") == 0.2);
  CHECK(at("110", "010") == 0.15);
  CHECK(at("111", "111") == Catch::Approx(1 - 0.45));
  CHECK(at("000", "110") == 0.0);
  CHECK(c.nu->coeff(0) == 1.0);
  CHECK(p.admissible());
  CHECK(p.total_rate() == Catch::Approx(0.8));
}

TEST_CASE("invalid walk parameters", "[cube_models]") {
  CHECK(kind_of([] { nearest_neighbor_walk(symmetric_walk(2, 0.6)); }) == ErrorKind::NegativeHoldingProbability);
  CHECK(kind_of([] { nearest_neighbor_walk({2, {0.1, 0.0}, {0.1, 0.1}}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { nearest_neighbor_walk({2, {0.1}, {0.1, 0.1}}); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([] { nearest_neighbor_walk(symmetric_walk(15, 0.01)); }) == ErrorKind::DimensionTooLarge);
}

TEST_CASE("powers of a monotone walk stay monotone", "[cube_models]") {
  Chain c = nearest_neighbor_walk(symmetric_walk(3, 0.12));
  auto zm = zeta_mobius(c.poset);
  for (unsigned k = 1; k <= 4; ++k) {
    Chain pk = power_chain(c, k);
    CHECK(mobius_monotone_down(pk, zm).verdict);
    CHECK(mobius_monotone_up(pk, zm).verdict);
    CHECK(ts::max_abs(stationary(pk).pi - stationary(c).pi) <= 1e-12);
  }
}

TEST_CASE("axis moves on the 3-cube", "[cube_models]") {
  Poset q = cube_poset(3);
  auto moves = symmetric_axis_moves(q, 0.05);
  std::vector<std::string> rows;
  for (const auto& mv : moves) rows.push_back(q.label(mv.row));
  std::sort(rows.begin(), rows.end());
  CHECK(rows == std::vector<std::string>{"000", "010", "101", "111"});
  for (const auto& mv : moves) CHECK_FALSE(q.comparable(mv.x, mv.y));
}

TEST_CASE("g+ walk on the symmetric 3-cube", "[cube_models]") {
  auto p = symmetric_walk(3, 0.1);
  Chain c = gplus_walk(p, 0.05);
  CHECK(ts::max_abs(c.P.rowwise().sum() - ColVector::Ones(8)) <= 1e-15);
  StationaryLaw law = stationary(c);
  auto zm = zeta_mobius(c.poset);
  Chain rev = reverse(c, law);
  CHECK(mobius_monotone(rev.P, zm, Direction::down).verdict);
  DualChain d = build_ssd(c, law, zm, Direction::down);
  CHECK(d.residuals.intertwining <= 1e-10);
  // kappa = alpha empties the axis neighbours of 000
  Chain extreme = gplus_walk(p, 0.1);
  CHECK(kind_of([&] { stationary(extreme); }) == ErrorKind::NotIrreducible);
  CHECK(kind_of([&] { gplus_walk(p, 0.11); }) == ErrorKind::InsufficientMass);
}

TEST_CASE("g+ transform error paths", "[cube_models]") {
  Chain c = nearest_neighbor_walk(symmetric_walk(2, 0.2));
  const Poset& q = c.poset;
  CHECK(kind_of([&] { gplus_transform(c, {0, q.index_of("00"), q.index_of("11"), 0.05}); }) ==
        ErrorKind::IncomparableRequired);
  CHECK(kind_of([&] { gplus_transform(c, {0, q.index_of("10"), q.index_of("01"), 0.5}); }) ==
        ErrorKind::InsufficientMass);
  Chain f = validate_chain(Matrix::Constant(4, 4, 0.25), ts::fence());
  CHECK(kind_of([&] { gplus_transform(f, {0, f.poset.index_of("a"), f.poset.index_of("c"), 0.05}); }) ==
        ErrorKind::NotLattice);
}

TEST_CASE("g+ transformed rows dominate in the supermodular order", "[cube_models]") {
  Chain c = nearest_neighbor_walk(symmetric_walk(3, 0.1));
  for (const auto& mv : symmetric_axis_moves(c.poset, 0.05)) {
    Chain t = gplus_transform(c, mv);
    const auto r = static_cast<Eigen::Index>(mv.row);
    auto rep = supermodular_order_witness(c.poset, c.P.row(r), t.P.row(r), 200, 1234 + mv.row);
    CHECK(rep.min_difference >= -1e-12);
    CHECK(rep.max_defect <= kSupermodularSlack);
  }
}

TEST_CASE("random supermodular functions pass the pair check", "[cube_models]") {
  std::mt19937_64 rng(77);
  for (const Poset& p : {cube_poset(3), cube_poset(4), ts::diamond(), ts::pentagon()})
    for (int t = 0; t < 50; ++t) CHECK(supermodularity_defect(p, random_supermodular(p, rng)) <= kSupermodularSlack);
  // a submodular function is caught
  Poset q = cube_poset(2);
  RowVector f(4);
  f << 0, 1, 1, 1;
  CHECK(supermodularity_defect(q, f) == Catch::Approx(1.0));
}

TEST_CASE("product form stationary law sums to one", "[cube_models]") {
  std::mt19937_64 rng(8);
  for (unsigned d = 1; d <= 8; ++d) CHECK(cube_stationary(ts::random_admissible(d, rng)).sum() == Catch::Approx(1.0));
}
