#include <doctest.h>

#include <cmath>
#include <vector>

#include "lbhalo/metrics.hpp"

using namespace lbhalo;
using namespace lbhalo::metrics;

TEST_CASE("message cost t = l + m/B") {
  CHECK(message_cost({0.0, 1.0}, 1.0e6) == 1.0);
  CHECK(message_cost({1.0e-6, 350.0}, 0.5e6) == doctest::Approx(1.0e-6 + 0.5 / 350.0).epsilon(1e-15));
  CHECK(message_cost({1.0e-6, 350.0}, 0.5e6) == doctest::Approx(1.4296e-3).epsilon(1e-4));
  CHECK(message_cost({3.0e-6, 100.0}, 0.0) == 3.0e-6);
  CHECK_THROWS_AS(message_cost({-1.0, 1.0}, 1.0), ConfigError);
  CHECK_THROWS_AS(message_cost({0.0, 0.0}, 1.0), ConfigError);
}

TEST_CASE("total cost: more messages for the same bytes cost exactly the extra latency") {
  const CostModelParams p{5.0e-6, 200.0};
  CHECK(total_cost(p, {}) == 0.0);
  const std::vector<double> one{1234.0};
  CHECK(total_cost(p, one) == message_cost(p, 1234.0));

  // 6 and 26 messages carrying the same total of 6*26*1000 bytes.
  const std::vector<double> six(6, 26.0 * 1000.0), twenty_six(26, 6.0 * 1000.0);
  CHECK(total_cost(p, twenty_six) - total_cost(p, six) == doctest::Approx(20 * p.latency_s).epsilon(1e-9));
  for (int n = 6; n <= 40; ++n) {
    const std::vector<double> split(static_cast<std::size_t>(n), 156000.0 / n);
    CHECK(total_cost(p, split) - total_cost(p, six) == doctest::Approx((n - 6) * p.latency_s).epsilon(1e-9));
  }
}

TEST_CASE("communication to work ratios") {
  CHECK(comm_work_ratio_cubic(2) == 7.0);
  for (int L = 1; L <= 64; ++L) {
    CHECK(comm_work_ratio(Eigen::Vector3i::Constant(L)) == doctest::Approx(comm_work_ratio_cubic(L)).epsilon(1e-15));
    CHECK(halo_sites(Eigen::Vector3i::Constant(L)) == 6 * L * L + 12 * L + 8);
  }
  for (int L = 1; L < 128; ++L) CHECK(comm_work_ratio_cubic(L + 1) < comm_work_ratio_cubic(L));
  for (int x = 2; x <= 56; x += 2) {
    const double xd = x;
    // Faces are x*1.5x, x*2x and 1.5x*2x, so the plane term is 13x^2.
    const double expected = (13 * xd * xd + 18 * xd + 8) / (3 * xd * xd * xd);
    CHECK(comm_work_ratio(Eigen::Vector3d(xd, 1.5 * xd, 2 * xd)) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(halo_sites(Eigen::Vector3i(2, 3, 4)) == 96);
  CHECK(halo_sites(Eigen::Vector3d(2, 3, 4)) == 96.0);
}

TEST_CASE("effective bandwidth and update rate") {
  CHECK(effective_bandwidth(Eigen::Vector3i::Constant(16), 19, 1.0) == doctest::Approx(0.263872).epsilon(1e-12));
  CHECK(effective_bandwidth(Eigen::Vector3i::Constant(16), 19, 2.0) ==
        doctest::Approx(effective_bandwidth(Eigen::Vector3i::Constant(16), 19, 1.0) / 2));
  CHECK(updates_per_core(Eigen::Vector3i::Constant(16), 1.0e-3) == doctest::Approx(4.096e6));
  CHECK(updates_per_core(Eigen::Vector3i::Constant(32), 1.0e-3) ==
        doctest::Approx(8 * updates_per_core(Eigen::Vector3i::Constant(16), 1.0e-3)));
  // B_eff * t / (8 m) recovers the halo site count.
  for (double t : {1.0e-4, 3.3e-3, 0.7}) {
    const Eigen::Vector3i d(5, 7, 9);
    CHECK(effective_bandwidth(d, 19, t) * 1.0e6 * t / (8 * 19) == doctest::Approx(halo_sites(d)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(effective_bandwidth(Eigen::Vector3i::Constant(4), 19, 0.0), DomainError);
  CHECK_THROWS_AS(updates_per_core(Eigen::Vector3i::Constant(4), -1.0), DomainError);
}

TEST_CASE("speedup and efficiency") {
  Series ideal{{1, 8.0}, {2, 4.0}, {4, 2.0}, {8, 1.0}};
  for (const auto& [p, s] : speedup(ideal, 1)) CHECK(s == p);
  for (const auto& [p, e] : efficiency(speedup(ideal, 1), 1)) CHECK(e == 1.0);
  Series flat{{24, 3.0}, {48, 3.0}, {96, 3.0}};
  for (const auto& [p, s] : speedup(flat, 24)) CHECK(s == 1.0);
  for (const auto& [p, e] : efficiency(speedup(flat, 24), 24)) CHECK(e == doctest::Approx(24.0 / p));
  CHECK_THROWS_AS(speedup(flat, 12), ConfigError);

  std::map<std::string, Series> versions{{"blocking", {{1, 10.0}, {2, 6.0}}}, {"nonblocking", {{1, 8.0}, {2, 5.0}}}};
  const auto common = speedup(versions, SpeedupBase::CommonT1, "blocking");
  CHECK(common.at("nonblocking").at(1) == 1.25);
  // Common base: speedup ratio is the inverse runtime ratio.
  CHECK(common.at("nonblocking").at(2) / common.at("blocking").at(2) == doctest::Approx(6.0 / 5.0));
  const auto own = speedup(versions, SpeedupBase::PerVersion);
  CHECK(own.at("nonblocking").at(1) == 1.0);
  CHECK(own.at("nonblocking").at(2) == 1.6);
  CHECK_THROWS_AS(speedup(versions, SpeedupBase::CommonT1, "missing"), ConfigError);

  const Series s{{24, 1.0}, {48, 1.8}};
  CHECK(efficiency(s, 24).at(48) == doctest::Approx(0.9));
}

TEST_CASE("population standard deviation") {
  const std::vector<double> constant(5, 3.25);
  CHECK(stddev(constant) == 0.0);
  CHECK(stddev(std::vector<double>{1, 3}) == 1.0);
  CHECK(stddev(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9}) == 2.0);
  CHECK(std::abs(stddev(std::vector<double>{0.1, 0.2, 0.4}) - std::sqrt(0.0155555555555555556)) < 1e-15);
  CHECK_THROWS_AS(stddev(std::vector<double>{}), DomainError);
}

TEST_CASE("derived quantities are computed per sample before sigma") {
  // Asymmetric times: f(mean) differs from mean(f) and sigma(f) from f(sigma).
  const std::vector<double> times{1.0, 2.0, 4.0};
  const auto inv = [](double t) { return 1.0 / t; };
  const Summary derived = summarize_derived(times, inv);
  CHECK(derived.mean == doctest::Approx((1.0 + 0.5 + 0.25) / 3).epsilon(1e-15));
  const double mu = 1.75 / 3;
  const double var = ((1 - mu) * (1 - mu) + (0.5 - mu) * (0.5 - mu) + (0.25 - mu) * (0.25 - mu)) / 3;
  CHECK(std::abs(derived.stddev - std::sqrt(var)) < 1e-15);
  CHECK(derived.mean != doctest::Approx(inv(mean(times))));
  CHECK(derived.stddev != doctest::Approx(inv(stddev(times))));
}
