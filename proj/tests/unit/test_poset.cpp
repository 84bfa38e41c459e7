#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace mobius;
namespace ts = testing_support;

TEST_CASE("singleton poset has C = [1]", "[poset]") {
  Poset p = build_poset({"a"}, {});
  auto zm = zeta_mobius(p);
  REQUIRE(zm.C.rows() == 1);
  CHECK(zm.C(0, 0) == 1.0);
  CHECK(zm.Cinv(0, 0) == 1.0);
  CHECK(is_lattice(p));
  CHECK(p.is_total_order());
}

TEST_CASE("enumeration is a linear extension", "[poset]") {
  for (const Poset& p : {ts::diamond(), ts::fence(), ts::pentagon(), ts::m3(), ts::square_times_chain(),
                         cube_poset(3), ts::linear(5)}) {
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j)
        if (p.leq(i, j)) CHECK(i <= j);
  }
}

TEST_CASE("Moebius matrix matches the recursive oracle and inverts zeta", "[poset]") {
  for (const Poset& p : {ts::diamond(), ts::fence(), ts::pentagon(), ts::m3(), ts::square_times_chain(),
                         cube_poset(4), ts::linear(6)}) {
    auto zm = zeta_mobius(p);
    IntMatrix mu = ts::oracle_mobius(p);
    CHECK(zm.mobius == mu);
    const auto m = static_cast<Eigen::Index>(p.size());
    CHECK(ts::max_abs(zm.C * zm.Cinv - Matrix::Identity(m, m)) == 0.0);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < i; ++j) CHECK(zm.C(i, j) == 0.0);
  }
}

TEST_CASE("2-cube zeta and Moebius matrices", "[poset]") {
  auto zm = zeta_mobius(cube_poset(2));
  Matrix C(4, 4), Ci(4, 4);
  C << 1, 1, 1, 1, 0, 1, 0, 1, 0, 0, 1, 1, 0, 0, 0, 1;
  Ci << 1, -1, -1, 1, 0, 1, 0, -1, 0, 0, 1, -1, 0, 0, 0, 1;
  CHECK(zm.C == C);
  CHECK(zm.Cinv == Ci);
}

TEST_CASE("cube Moebius function is (-1)^{|y|-|x|} on intervals", "[poset]") {
  Poset p = cube_poset(5);
  auto zm = zeta_mobius(p);
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = 0; y < p.size(); ++y) {
      std::uint32_t a = p.cube_mask(x), b = p.cube_mask(y);
      std::int64_t want = (a & ~b) ? 0 : ((std::popcount(b & ~a) % 2) ? -1 : 1);
      CHECK(zm.mobius(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) == want);
    }
}

TEST_CASE("cube enumeration orders by weight then mask", "[poset]") {
  Poset p = cube_poset(3);
  std::vector<std::string> want = {"000", "100", "010", "001", "110", "101", "011", "111"};
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(p.label(i) == want[i]);
    CHECK(p.index_of_mask(p.cube_mask(i)) == i);
  }
}

TEST_CASE("lattice detection agrees with the exhaustive oracle", "[poset]") {
  CHECK_FALSE(is_lattice(ts::fence()));
  CHECK(is_lattice(ts::diamond()));
  CHECK(is_lattice(ts::pentagon()));
  CHECK(is_lattice(ts::m3()));
  Poset bowtie = build_poset({"a", "b", "c", "d"}, {{"a", "c"}, {"a", "d"}, {"b", "c"}, {"b", "d"}});
  CHECK_FALSE(is_lattice(bowtie));
  for (const Poset& p : {ts::diamond(), ts::fence(), ts::pentagon(), ts::m3(), bowtie, ts::square_times_chain(),
                         cube_poset(3)})
    CHECK(is_lattice(p) == ts::oracle_is_lattice(p));
}

TEST_CASE("meet and join on the pentagon", "[poset]") {
  Poset p = ts::pentagon();
  auto b = p.index_of("b"), c = p.index_of("c"), a = p.index_of("a");
  CHECK(*meet(p, b, c) == p.index_of("0"));
  CHECK(*join(p, a, c) == p.index_of("1"));
  CHECK(*meet(p, a, b) == a);
  CHECK_FALSE(meet(ts::fence(), ts::fence().index_of("a"), ts::fence().index_of("c")).has_value());
}

TEST_CASE("up and down sets", "[poset]") {
  Poset p = ts::diamond();
  CHECK(up_set(p, "b") == std::vector<std::size_t>{p.index_of("b"), p.index_of("d")});
  CHECK(down_set(p, "b") == std::vector<std::size_t>{p.index_of("a"), p.index_of("b")});
  CHECK(up_set(p, "a").size() == 4);
}

TEST_CASE("malformed posets are rejected", "[poset]") {
  auto kind = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IOError;
  };
  CHECK(kind([] { build_poset({"a", "b"}, {{"a", "b"}, {"b", "a"}}); }) == ErrorKind::CycleError);
  CHECK(kind([] { build_poset({"a", "a"}, {}); }) == ErrorKind::DuplicateLabel);
  CHECK(kind([] { build_poset({"a"}, {{"a", "z"}}); }) == ErrorKind::UnknownState);
  CHECK(kind([] { cube_poset(kMaxCubeDimension + 1); }) == ErrorKind::DimensionTooLarge);
}

TEST_CASE("total order detection", "[poset]") {
  CHECK(ts::linear(4).is_total_order());
  CHECK_FALSE(ts::diamond().is_total_order());
  CHECK(ts::diamond().maximal_elements().size() == 1);
  CHECK(ts::fence().maximal_elements().size() == 2);
}
