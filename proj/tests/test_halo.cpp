#include <doctest.h>

#include <random>
#include <set>

#include "lbhalo/halo.hpp"
#include "support.hpp"

using namespace lbhalo;
using lbhalo::testing::check_halos;
using lbhalo::testing::exchange_all;
using lbhalo::testing::random_fields;

TEST_CASE("buffer sizes for a (2,3,4) subdomain") {
  const Vec3i L(2, 3, 4);
  const int m = 3;
  HaloBuffers b(L, m);
  CHECK(b.send(MMP).size() == static_cast<std::size_t>(2 * 3 * m));  // plane perpendicular to z
  CHECK(b.send(PMM).size() == static_cast<std::size_t>(3 * 4 * m));  // plane perpendicular to x
  CHECK(b.send(NNM).size() == static_cast<std::size_t>(4 * m));      // edge parallel to z
  CHECK(b.send(NMN).size() == static_cast<std::size_t>(3 * m));      // edge parallel to y
  CHECK(b.send(PPP).size() == static_cast<std::size_t>(m));
  CHECK(b.stage_recv(X, BACKWARD).size() == static_cast<std::size_t>(3 * 4 * m));
  CHECK(b.stage_recv(Y, FORWARD).size() == static_cast<std::size_t>((2 + 2) * 4 * m));
  CHECK(b.stage_recv(Z, BACKWARD).size() == static_cast<std::size_t>((2 + 2) * (3 + 2) * m));
  const std::size_t halo = static_cast<std::size_t>(4 * 5 * 6 - 24);
  CHECK(b.nonblocking_recv_doubles() == halo * m);
  CHECK(b.blocking_recv_doubles() == halo * m);
  CHECK(halo_site_count(L) == 96u);

  for (int n = 0; n < kNeighbourCount; ++n) {
    const Vec3i d = displacement(n);
    CHECK(b.send(n).size() == b.recv(opposite_neighbour(n)).size());
    CHECK(static_cast<int>(group_of(n)) == d.cwiseAbs().sum());
  }
}

TEST_CASE("receive regions tile the halo shell exactly once") {
  for (const Vec3i L : {Vec3i(1, 1, 1), Vec3i(2, 3, 4), Vec3i(5, 2, 1)}) {
    DistributionField count(L, 1);
    for (int n = 0; n < kNeighbourCount; ++n) {
      const SiteBox box = recv_region(L, n);
      for (int x = box.lo.x(); x <= box.hi.x(); ++x)
        for (int y = box.lo.y(); y <= box.hi.y(); ++y)
          for (int z = box.lo.z(); z <= box.hi.z(); ++z) count(x, y, z, 0) += 1.0;
    }
    const Vec3i S = count.storage_dims();
    for (int x = 0; x < S.x(); ++x)
      for (int y = 0; y < S.y(); ++y)
        for (int z = 0; z < S.z(); ++z) CHECK(count(x, y, z, 0) == (count.is_halo(Vec3i(x, y, z)) ? 1.0 : 0.0));
  }
}

TEST_CASE("pack order is ascending x, y, z with components innermost") {
  const Vec3i L(3, 2, 4);
  const int m = 2;
  DistributionField f(L, m);
  for (int x = 0; x <= L.x() + 1; ++x)
    for (int y = 0; y <= L.y() + 1; ++y)
      for (int z = 0; z <= L.z() + 1; ++z)
        for (int i = 0; i < m; ++i) f(x, y, z, i) = 1000 * x + 100 * y + 10 * z + i;
  HaloBuffers b(L, m);
  pack_group(f, HaloGroup::Planes, b);
  pack_group(f, HaloGroup::Edges, b);
  pack_group(f, HaloGroup::Corners, b);

  std::vector<double> expect;
  for (int y = 1; y <= L.y(); ++y)
    for (int z = 1; z <= L.z(); ++z)
      for (int i = 0; i < m; ++i) expect.push_back(1000 * L.x() + 100 * y + 10 * z + i);
  CHECK(std::vector<double>(b.send(PMM).begin(), b.send(PMM).end()) == expect);

  CHECK(std::vector<double>(b.send(NNN).begin(), b.send(NNN).end()) == std::vector<double>{1110, 1111});

  expect.clear();
  for (int z = 1; z <= L.z(); ++z)
    for (int i = 0; i < m; ++i) expect.push_back(1000 + 100 + 10 * z + i);
  CHECK(std::vector<double>(b.send(NNM).begin(), b.send(NNM).end()) == expect);

  std::size_t total = 0;
  for (int n = 0; n < kNeighbourCount; ++n) total += b.send(n).size();
  CHECK(total == halo_site_count(L) * m);

  DistributionField small(Vec3i(1, 1, 1), m);
  CHECK_THROWS_AS(pack_group(small, HaloGroup::Planes, b), ConfigError);
  CHECK_THROWS_AS(unpack_halo_buffers(b, small), ConfigError);
}

TEST_CASE("cubic packed totals match 6L^2+12L+8") {
  for (int L = 1; L <= 10; ++L) {
    HaloBuffers b(Vec3i::Constant(L), 19);
    CHECK(b.nonblocking_recv_doubles() == static_cast<std::size_t>((6 * L * L + 12 * L + 8) * 19));
    CHECK(b.blocking_recv_doubles() == static_cast<std::size_t>((6 * L * L + 12 * L + 8) * 19));
  }
}

TEST_CASE("pack then unpack on one periodic rank fills the halo with the periodic wrap") {
  const Vec3i L(3, 1, 2);
  const CartesianTopology topo(Vec3i(1, 1, 1));
  auto fields = random_fields(topo, L, 4, 99);
  const auto before = fields;
  HaloBuffers b(L, 4);
  for (HaloGroup g : {HaloGroup::Planes, HaloGroup::Edges, HaloGroup::Corners}) pack_group(fields[0], g, b);
  for (int n = 0; n < kNeighbourCount; ++n) {
    // On a single periodic rank the message received from displacement d is the one sent towards -d.
    auto src = b.send(opposite_neighbour(n));
    std::copy(src.begin(), src.end(), b.recv(n).begin());
  }
  unpack_halo_buffers(b, fields[0]);
  CHECK(check_halos(topo, before, fields, true) == "");
}

TEST_CASE("both strategies fill every halo from the owning rank") {
  struct Setup {
    Vec3i procs;
    Vec3i local;
    std::array<bool, 3> periodic;
  };
  const Setup setups[] = {
      {{1, 1, 1}, {3, 3, 3}, {true, true, true}}, {{2, 2, 2}, {2, 3, 4}, {true, true, true}},
      {{2, 1, 1}, {1, 2, 1}, {true, true, true}}, {{4, 3, 2}, {2, 2, 2}, {true, true, true}},
      {{2, 2, 1}, {3, 2, 2}, {false, true, false}}, {{2, 2, 2}, {2, 2, 2}, {false, false, false}},
      {{3, 1, 2}, {1, 1, 1}, {true, false, true}},
  };
  for (const auto& s : setups) {
    for (HaloStrategy strategy : {HaloStrategy::Blocking, HaloStrategy::Nonblocking}) {
      CAPTURE(s.procs.transpose());
      CAPTURE(s.local.transpose());
      CAPTURE(to_string(strategy));
      const CartesianTopology topo(s.procs, s.periodic);
      auto fields = random_fields(topo, s.local, 3, 17);
      const auto before = fields;
      exchange_all(topo, fields, strategy);
      // Without a neighbour the non-blocking exchange leaves the halo alone;
      // the blocking one may forward stale edge data there.
      CHECK(check_halos(topo, before, fields, strategy == HaloStrategy::Nonblocking) == "");
    }
  }
}

TEST_CASE("instrumentation counts messages, bytes and waits") {
  const CartesianTopology topo(Vec3i(2, 2, 2));
  const Vec3i L(3, 4, 5);
  const int m = 19;
  auto fields = random_fields(topo, L, m, 1);
  std::vector<HaloCounters> counters(8);
  transport::Fabric fabric(8);
  transport::run_ranks(fabric, [&](transport::Endpoint& ep) {
    auto& f = fields[static_cast<std::size_t>(ep.rank())];
    HaloExchange ex(topo, ep, L, m);
    ex.exchange_blocking(f);
    const HaloCounters after_blocking = ex.counters();
    CHECK(after_blocking.messages_sent == 6u);
    CHECK(after_blocking.messages_received == 6u);
    CHECK(after_blocking.barriers == 3u);
    CHECK(after_blocking.bytes_sent == halo_site_count(L) * m * 8);

    HaloToken token = ex.exchange_nonblocking_start(f);
    CHECK(token.open());
    CHECK(ex.counters().messages_sent - after_blocking.messages_sent == 26u);
    CHECK(ex.counters().messages_received - after_blocking.messages_received == 26u);
    CHECK(ex.counters().wait_calls == after_blocking.wait_calls);
    CHECK(ex.counters().barriers == after_blocking.barriers);
    CHECK(ex.counters().start_waits == 0u);
    ex.exchange_nonblocking_end(token, f);
    CHECK_FALSE(token.open());
    CHECK(ex.counters().barriers - after_blocking.barriers == 1u);
    CHECK(ex.counters().bytes_sent == 2 * after_blocking.bytes_sent);
    CHECK_THROWS_AS(ex.exchange_nonblocking_end(token, f), UsageError);
  });
}

TEST_CASE("misuse of the start/end protocol is rejected") {
  const CartesianTopology topo(Vec3i(1, 1, 1));
  transport::Fabric fabric(1);
  transport::run_ranks(fabric, [&](transport::Endpoint& ep) {
    DistributionField f(Vec3i(2, 2, 2), 2), g(Vec3i(2, 2, 2), 2);
    HaloExchange ex(topo, ep, Vec3i(2, 2, 2), 2);
    HaloToken token = ex.exchange_nonblocking_start(f);
    CHECK_THROWS_AS(ex.exchange_nonblocking_start(f), UsageError);
    CHECK_THROWS_AS(ex.exchange_blocking(f), UsageError);
    CHECK_THROWS_AS(ex.exchange_nonblocking_end(token, g), UsageError);
    ex.exchange_nonblocking_end(token, f);
    HaloToken blank;
    CHECK_THROWS_AS(ex.exchange_nonblocking_end(blank, f), UsageError);
    DistributionField wrong(Vec3i(2, 2, 3), 2);
    CHECK_THROWS_AS(ex.exchange_blocking(wrong), ConfigError);
  });
  CHECK_THROWS_AS(HaloExchange(CartesianTopology(Vec3i(2, 1, 1)), fabric.endpoint(0), Vec3i(2, 2, 2), 2),
                  ConfigError);
}

TEST_CASE("tags are distinct across messages and consecutive exchanges") {
  std::set<int> tags;
  for (std::uint64_t seq = 0; seq < 3; ++seq)
    for (int id = 0; id < kTagStride; ++id) CHECK(tags.insert(message_tag(seq, id)).second);
  for (int a = 0; a < 3; ++a)
    for (Direction d : {BACKWARD, FORWARD}) {
      CHECK(stage_message_id(a, d) >= kNeighbourCount);
      CHECK(stage_message_id(a, d) < kTagStride);
    }
}

TEST_CASE("a stalled peer surfaces as an annotated deadlock") {
  transport::TransportOptions opt;
  opt.watchdog_seconds = 0.3;
  const CartesianTopology topo(Vec3i(2, 1, 1));
  for (HaloStrategy strategy : {HaloStrategy::Blocking, HaloStrategy::Nonblocking}) {
    transport::Fabric fabric(2, opt);
    std::string message;
    try {
      transport::run_ranks(fabric, [&](transport::Endpoint& ep) {
        if (ep.rank() == 1) return;  // never joins the exchange
        DistributionField f(Vec3i(2, 2, 2), 1);
        HaloExchange ex(topo, ep, f.local_dims(), 1);
        ex.exchange(f, strategy);
      });
    } catch (const transport::DeadlockError& e) {
      message = e.what();
      CHECK_FALSE(e.pending().empty());
    }
    if (strategy == HaloStrategy::Blocking) {
      CHECK(message.find("blocked in X stage") != std::string::npos);
    } else {
      CHECK(message.find("outstanding receives") != std::string::npos);
      CHECK(message.find("PMM") != std::string::npos);
    }
  }
}

TEST_CASE("strategies agree bit for bit on random fields") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3i procs(dim(rng) % 3 + 1, dim(rng) % 2 + 1, dim(rng) % 2 + 1);
    const Vec3i L(dim(rng), dim(rng), dim(rng));
    const CartesianTopology topo(procs);
    auto a = random_fields(topo, L, 2, static_cast<std::uint64_t>(trial));
    auto b = a;
    exchange_all(topo, a, HaloStrategy::Blocking);
    exchange_all(topo, b, HaloStrategy::Nonblocking);
    for (std::size_t r = 0; r < a.size(); ++r) REQUIRE(a[r] == b[r]);
  }
}
