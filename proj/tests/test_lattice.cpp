#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "lbhalo/lattice.hpp"
#include "support.hpp"

using namespace lbhalo;

TEST_CASE("velocity sets satisfy the model invariants") {
  for (int m : {15, 19, 27}) {
    CAPTURE(m);
    const VelocitySet vs = VelocitySet::with_count(m);
    REQUIRE(vs.size() == m);
    CHECK(vs.velocity(0) == Vec3i::Zero());
    CHECK(vs.weights().sum() == doctest::Approx(1.0).epsilon(1e-15));
    Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
    for (int i = 0; i < m; ++i) {
      CHECK(vs.weight(i) > 0.0);
      CHECK(vs.velocity(vs.opposite(i)) == -vs.velocity(i));
      CHECK(vs.opposite(vs.opposite(i)) == i);
      CHECK((vs.velocity(i).array().abs() <= 1).all());
      second += vs.weight(i) * vs.velocity(i).cast<double>() * vs.velocity(i).cast<double>().transpose();
    }
    // Second moment of the weights is c_s^2 I with c_s^2 = 1/3.
    CHECK((second - Eigen::Matrix3d::Identity() / 3.0).cwiseAbs().maxCoeff() < 1e-15);
  }
  const VelocitySet q19 = VelocitySet::d3q19();
  for (const Vec3i& e : q19.velocities()) CHECK(e.squaredNorm() <= 2);
  CHECK_THROWS_AS(VelocitySet::with_count(20), ConfigError);
}

TEST_CASE("D3Q19 weights are 1/3, 1/18, 1/36 by shell") {
  const VelocitySet vs = VelocitySet::d3q19();
  for (int i = 0; i < vs.size(); ++i) {
    const int n = vs.velocity(i).squaredNorm();
    const double w = n == 0 ? 1.0 / 3 : (n == 1 ? 1.0 / 18 : 1.0 / 36);
    CHECK(vs.weight(i) == w);
  }
}

TEST_CASE("density and velocity moments") {
  const VelocitySet vs = VelocitySet::d3q19();
  DistributionField f(Vec3i(2, 2, 2), 19);
  const Vec3i s(1, 2, 1);
  CHECK(density(f, s) == 0.0);
  CHECK_THROWS_AS(velocity(f, s, vs), ZeroDensityError);

  for (int i = 0; i < 19; ++i) f(1, 2, 1, i) = vs.weight(i);
  CHECK(density(f, s) == doctest::Approx(1.0));
  CHECK(velocity(f, s, vs).norm() < 1e-16);

  for (int i = 0; i < 19; ++i) f(1, 2, 1, i) = i;
  CHECK(density(f, s) == 171.0);

  int east = -1;
  for (int i = 0; i < 19; ++i)
    if (vs.velocity(i) == Vec3i(1, 0, 0)) east = i;
  REQUIRE(east > 0);
  for (int i = 0; i < 19; ++i) f(1, 2, 1, i) = 0.0;
  f(1, 2, 1, 0) = 2.0;
  f(1, 2, 1, east) = 2.0;
  CHECK(velocity(f, s, vs) == Vec3d(0.5, 0.0, 0.0));

  CHECK_THROWS_AS(density(f, Vec3i(0, 1, 1)), DomainError);
  CHECK_THROWS_AS(density(f, Vec3i(3, 1, 1)), DomainError);
}

TEST_CASE("symmetric populations have zero velocity") {
  const VelocitySet vs = VelocitySet::d3q19();
  DistributionField f(Vec3i(1, 1, 1), 19);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.1, 1.0);
  for (int i = 0; i < 19; ++i) {
    if (vs.opposite(i) < i) continue;
    const double v = d(rng);
    f(1, 1, 1, i) = v;
    f(1, 1, 1, vs.opposite(i)) = v;
  }
  CHECK(velocity(f, Vec3i(1, 1, 1), vs).norm() < 1e-15);
}

TEST_CASE("equilibrium reproduces its moments") {
  const VelocitySet vs = VelocitySet::d3q19();
  const SiteVector rest = equilibrium(1.0, Vec3d::Zero(), vs);
  for (int i = 0; i < 19; ++i) CHECK(rest(i) == vs.weight(i));
  const SiteVector twice = equilibrium(2.0, Vec3d::Zero(), vs);
  for (int i = 0; i < 19; ++i) CHECK(twice(i) == 2.0 * vs.weight(i));
  CHECK_THROWS_AS(equilibrium(0.0, Vec3d::Zero(), vs), NumericError);
  CHECK_THROWS_AS(equilibrium(-1.0, Vec3d::Zero(), vs), NumericError);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rho_d(0.5, 2.0), u_d(-0.1, 0.1);
  for (int m : {15, 19, 27}) {
    const VelocitySet v = VelocitySet::with_count(m);
    for (int trial = 0; trial < 50; ++trial) {
      const double rho = rho_d(rng);
      const Vec3d u(u_d(rng), u_d(rng), u_d(rng));
      const SiteVector feq = equilibrium(rho, u, v);
      CHECK(std::abs(feq.sum() - rho) < 1e-14);
      const Vec3d mom = v.directions().transpose() * feq;
      CHECK((mom / rho - u).cwiseAbs().maxCoeff() < 1e-15);
    }
  }
}

TEST_CASE("collide relaxes toward equilibrium and conserves site moments") {
  const VelocitySet vs = VelocitySet::d3q19();
  const CartesianTopology topo(Vec3i(1, 1, 1));
  DistributionField f(Vec3i(3, 2, 2), 19);
  seed_field(f, topo, 0, 5, &vs);
  // Perturb away from equilibrium while keeping populations positive.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.0, 0.01);
  for (int x = 1; x <= 3; ++x)
    for (int y = 1; y <= 2; ++y)
      for (int z = 1; z <= 2; ++z)
        for (int i = 0; i < 19; ++i) f(x, y, z, i) += d(rng);

  DistributionField before = f;
  collide(f, vs, 0.8);
  for (int x = 1; x <= 3; ++x)
    for (int y = 1; y <= 2; ++y)
      for (int z = 1; z <= 2; ++z) {
        const Vec3i s(x, y, z);
        CHECK(std::abs(density(f, s) - density(before, s)) < 1e-14);
        CHECK((velocity(f, s, vs) - velocity(before, s, vs)).cwiseAbs().maxCoeff() < 1e-14);
      }

  // tau = 1 replaces every population with its equilibrium.
  DistributionField g = before;
  collide(g, vs, 1.0);
  const Vec3i s(2, 1, 2);
  const SiteVector feq = equilibrium(density(before, s), velocity(before, s, vs), vs);
  for (int i = 0; i < 19; ++i) CHECK(g(2, 1, 2, i) == doctest::Approx(feq(i)).epsilon(1e-15));

  CHECK_THROWS_AS(collide(g, vs, 0.5), NumericError);
  DistributionField wrong(Vec3i(1, 1, 1), 15);
  CHECK_THROWS_AS(collide(wrong, vs, 1.0), ConfigError);
  g(1, 1, 1, 3) = std::nan("");
  CHECK_THROWS_AS(collide(g, vs, 1.0), NumericError);
}

TEST_CASE("streaming moves each population one site along its velocity") {
  const VelocitySet vs = VelocitySet::d3q19();
  const CartesianTopology topo(Vec3i(1, 1, 1));
  const Vec3i L(4, 3, 5);
  auto fields = testing::random_fields(topo, L, 19, 21);
  testing::exchange_all(topo, fields, HaloStrategy::Nonblocking);
  const DistributionField before = fields[0];
  DistributionField f = before;
  stream(f, vs);
  for (int x = 1; x <= L.x(); ++x)
    for (int y = 1; y <= L.y(); ++y)
      for (int z = 1; z <= L.z(); ++z)
        for (int i = 0; i < 19; ++i) {
          const Vec3i e = vs.velocity(i);
          // Periodic source computed directly from interior coordinates.
          const Vec3i src((x - 1 - e.x() + L.x()) % L.x() + 1, (y - 1 - e.y() + L.y()) % L.y() + 1,
                          (z - 1 - e.z() + L.z()) % L.z() + 1);
          REQUIRE(f(x, y, z, i) == before(src.x(), src.y(), src.z(), i));
        }
  CHECK(total_mass(f) == doctest::Approx(total_mass(before)).epsilon(1e-14));
}

TEST_CASE("field storage covers the halo shell") {
  for (int L = 1; L <= 8; ++L) {
    const DistributionField f(Vec3i::Constant(L), 19);
    CHECK(f.halo_site_count() == static_cast<std::size_t>(6 * L * L + 12 * L + 8));
    CHECK(f.data().size() == static_cast<std::size_t>((L + 2) * (L + 2) * (L + 2) * 19));
  }
  const DistributionField g(Vec3i(2, 3, 4), 5);
  CHECK(g.halo_site_count() == 96);
  CHECK(g.site_offset(1, 0, 0) == static_cast<std::size_t>(5 * 6 * 5));
  CHECK(g.site_offset(0, 0, 1) == 5u);
  CHECK(g.is_halo(Vec3i(0, 1, 1)));
  CHECK(g.is_interior(Vec3i(2, 3, 4)));
  CHECK_FALSE(g.in_storage(Vec3i(4, 0, 0)));
  CHECK_THROWS_AS(DistributionField(Vec3i(0, 1, 1), 19), ConfigError);
}

TEST_CASE("memory estimate of the full lattice") {
  CHECK(memory_estimate({512, 512, 512}, 19) == 8ULL * 19 * 512 * 512 * 512);
  CHECK(memory_estimate({512, 512, 512}, 19) == 20401094656ULL);
  CHECK(memory_estimate({1, 1, 1}, 1) == 8u);
  CHECK_THROWS_AS(memory_estimate({1ULL << 40, 1ULL << 20, 1}, 19), OverflowError);
  CHECK_THROWS_AS(memory_estimate({0, 1, 1}, 19), ConfigError);
}
