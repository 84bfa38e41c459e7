#include "support.hpp"

#include <catch_amalgamated.hpp>

using namespace mobius;
namespace ts = testing_support;

namespace {

RateSpec product(std::vector<double> v) {
  RateSpec r;
  r.family = RateSpec::Family::product;
  r.params = std::move(v);
  return r;
}

RateSpec geometric(double c) {
  RateSpec r;
  r.family = RateSpec::Family::geometric;
  r.base = c;
  return r;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IOError;
}

}  // namespace

TEST_CASE("geometric breakdown rates on two nodes", "[availability]") {
  const double c = 0.3;
  Generator g = availability_generator(make_rates(2, geometric(c), geometric(2.0)));
  const Poset& q = g.poset;
  auto Q = [&](const char* a, const char* b) { return g.Q(q.index_of(a), q.index_of(b)); };
  CHECK(Q("00", "10") == Catch::Approx(c));
  CHECK(Q("00", "01") == Catch::Approx(c));
  CHECK(Q("00", "11") == Catch::Approx(c * c));
  CHECK(Q("10", "11") == Catch::Approx(c));
  CHECK(Q("11", "00") == Catch::Approx(4.0));
  CHECK(Q("11", "10") == Catch::Approx(2.0));
  CHECK(ts::max_abs(g.Q.rowwise().sum().transpose()) <= 1e-15);
}

TEST_CASE("group moves can be suppressed", "[availability]") {
  Generator g = availability_generator(make_rates(3, product({0.2, 0.3, 0.4}), product({1, 1, 1})), 1);
  for (Eigen::Index i = 0; i < g.Q.rows(); ++i)
    for (Eigen::Index j = 0; j < g.Q.cols(); ++j)
      if (i != j && g.Q(i, j) != 0.0)
        CHECK(std::popcount(g.poset.cube_mask(static_cast<std::size_t>(i)) ^
                            g.poset.cube_mask(static_cast<std::size_t>(j))) == 1);
}

TEST_CASE("stationary law is proportional to psi / phi", "[availability]") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (unsigned d = 1; d <= 4; ++d) {
    RateFunctions r{d, {}, {}};
    for (std::uint32_t D = 0; D < (1u << d); ++D) {
      r.psi.push_back(D == 0 ? 1.0 : u(rng));
      r.phi.push_back(D == 0 ? 1.0 : u(rng));
    }
    Generator g = availability_generator(r);
    Uniformized un = uniformize(g, 1.5);
    StationaryLaw law = stationary(un.chain);
    RowVector want(g.Q.rows());
    for (Eigen::Index s = 0; s < want.size(); ++s) {
      auto D = g.poset.cube_mask(static_cast<std::size_t>(s));
      want(s) = r.psi[D] / r.phi[D];
    }
    want /= want.sum();
    CHECK(ts::max_abs(law.pi - want) <= 1e-12);
    CHECK((law.pi * g.Q).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("single-node product rates reduce to the nearest neighbour walk", "[availability]") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (unsigned d = 1; d <= 6; ++d) {
    std::vector<double> a(d), b(d);
    for (unsigned i = 0; i < d; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
    }
    Uniformized un = uniformize(availability_generator(make_rates(d, product(a), product(b)), 1), 1.3);
    CubeWalkParams p{d, {}, {}};
    for (unsigned i = 0; i < d; ++i) {
      p.alpha.push_back(a[i] / un.rate);
      p.beta.push_back(b[i] / un.rate);
    }
    CHECK(ts::max_abs(un.chain.P - nearest_neighbor_walk(p).P) <= 1e-12);
  }
}

TEST_CASE("table entries override the family", "[availability]") {
  RateSpec phi = product({2, 3});
  phi.table[3] = 7.0;
  auto r = make_rates(2, geometric(0.5), phi);
  CHECK(r.phi[3] == 7.0);
  CHECK(r.phi[1] == 2.0);
  CHECK(r.psi[3] == 0.25);
  RateSpec partial;
  partial.table[0] = 1.0;
  CHECK(kind_of([&] { make_rates(2, partial, phi); }) == ErrorKind::MissingSubsetValue);
  CHECK(kind_of([&] { make_rates(0, phi, phi); }) == ErrorKind::DimensionTooLarge);
  RateFunctions bad{1, {1.0, -1.0}, {1.0, 1.0}};
  CHECK(kind_of([&] { availability_generator(bad); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("uniformization guards", "[availability]") {
  Generator g = availability_generator(make_rates(2, geometric(0.5), geometric(1.0)));
  CHECK(kind_of([&] { uniformize(g, 0.9); }) == ErrorKind::InvalidArgument);
  Generator zero{cube_poset(1), Matrix::Zero(2, 2)};
  CHECK(kind_of([&] { uniformize(zero); }) == ErrorKind::ZeroGenerator);
  Uniformized un = uniformize(g, 1.05);
  CHECK(un.chain.P.diagonal().minCoeff() > 0.0);
  CHECK(un.chain.nu->coeff(0) == 1.0);
}

TEST_CASE("pipeline on admissible product rates", "[availability]") {
  auto r = make_rates(3, product({0.3, 0.2, 0.1}), product({1, 2, 3}));
  PipelineOptions o;
  o.max_group = 1;
  o.multiplier = 1.2;
  o.horizon = 60;
  AvailabilityReport rep = availability_pipeline(r, o);
  REQUIRE(rep.admissible);
  CHECK(rep.stopped_at.empty());
  REQUIRE(rep.dual.has_value());
  CHECK(rep.generator_residual <= 1e-12);
  CHECK(rep.sst->holds);
  CHECK(rep.sst->equality);  // the walk is a cube walk, so the bound is tight
  CHECK(rep.dual->absorbing_index == 7);
}

TEST_CASE("pipeline stops when the uniformized walk is not monotone", "[availability]") {
  auto r = make_rates(3, product({0.3, 0.2, 0.1}), product({1, 2, 3}));
  PipelineOptions o;
  o.max_group = 1;  // default multiplier leaves sum(alpha + beta) > 1
  AvailabilityReport rep = availability_pipeline(r, o);
  CHECK_FALSE(rep.admissible);
  CHECK(rep.stopped_at == "monotonicity");
  CHECK_FALSE(rep.dual.has_value());
  CHECK_FALSE(rep.reversed.verdict);
}

TEST_CASE("pipeline errors carry their stage", "[availability]") {
  auto r = make_rates(2, geometric(0.5), geometric(1.0));
  PipelineOptions o;
  o.multiplier = 0.5;
  try {
    availability_pipeline(r, o);
    FAIL("accepted");
  } catch (const Error& e) {
    bool staged = false;
    for (const auto& [k, v] : e.details()) staged |= k == "stage" && v == "uniformize";
    CHECK(staged);
  }
}
