#pragma once

// Test helpers: an exchange driver and a halo oracle that works from global
// coordinates, independent of the neighbour tables used by the exchange code.

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "lbhalo/halo.hpp"
#include "lbhalo/harness.hpp"
#include "lbhalo/topology.hpp"
#include "lbhalo/transport.hpp"

namespace lbhalo::testing {

/// Per-rank fields with every storage value (halo included) set randomly.
inline std::vector<DistributionField> random_fields(const CartesianTopology& topo, const Vec3i& L, int m,
                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<DistributionField> out;
  for (int r = 0; r < topo.size(); ++r) {
    out.emplace_back(L, m);
    for (double& v : out.back().data()) v = dist(rng);
  }
  return out;
}

/// Runs one exchange on every rank.
inline void exchange_all(const CartesianTopology& topo, std::vector<DistributionField>& fields, HaloStrategy strategy,
                         const transport::TransportOptions& options = {}) {
  transport::Fabric fabric(topo.size(), options);
  transport::run_ranks(fabric, [&](transport::Endpoint& ep) {
    auto& f = fields[static_cast<std::size_t>(ep.rank())];
    HaloExchange ex(topo, ep, f.local_dims(), f.components());
    ex.exchange(f, strategy);
  });
}

/// Rank and local site holding global coordinate g, or nullopt when g lies
/// outside a non-periodic dimension.
inline std::optional<std::pair<int, Vec3i>> owner_of(const CartesianTopology& topo, const Vec3i& L, Vec3i g) {
  const Vec3i G = topo.dims().cwiseProduct(L);
  for (int a = 0; a < 3; ++a) {
    if (g(a) < 0 || g(a) >= G(a)) {
      if (!topo.periodic()[static_cast<std::size_t>(a)]) return std::nullopt;
      g(a) = ((g(a) % G(a)) + G(a)) % G(a);
    }
  }
  Vec3i coords, local;
  for (int a = 0; a < 3; ++a) {
    coords(a) = g(a) / L(a);
    local(a) = g(a) % L(a) + 1;
  }
  return std::make_pair((coords.x() * topo.dims().y() + coords.y()) * topo.dims().z() + coords.z(), local);
}

/// Checks every halo value of `after` against the interior of `before`, via
/// global coordinates. Halo sites with no owner must be unchanged from
/// `before` when `strict_missing` is set. Returns a description of the first
/// mismatch, or an empty string.
inline std::string check_halos(const CartesianTopology& topo, const std::vector<DistributionField>& before,
                               const std::vector<DistributionField>& after, bool strict_missing) {
  const Vec3i L = before.front().local_dims();
  const int m = before.front().components();
  for (int r = 0; r < topo.size(); ++r) {
    const Vec3i origin = topo.coords_of(r).cwiseProduct(L);
    const auto& f = after[static_cast<std::size_t>(r)];
    for (int x = 0; x <= L.x() + 1; ++x)
      for (int y = 0; y <= L.y() + 1; ++y)
        for (int z = 0; z <= L.z() + 1; ++z) {
          const Vec3i h(x, y, z);
          const bool halo = f.is_halo(h);
          const auto owner = owner_of(topo, L, origin + h - Vec3i::Ones());
          for (int i = 0; i < m; ++i) {
            double expected;
            if (!halo) {
              expected = before[static_cast<std::size_t>(r)](x, y, z, i);
            } else if (owner) {
              expected = before[static_cast<std::size_t>(owner->first)](owner->second.x(), owner->second.y(),
                                                                         owner->second.z(), i);
            } else if (strict_missing) {
              expected = before[static_cast<std::size_t>(r)](x, y, z, i);
            } else {
              continue;
            }
            if (f(x, y, z, i) != expected) {
              return "rank " + std::to_string(r) + " site (" + std::to_string(x) + "," + std::to_string(y) + "," +
                     std::to_string(z) + ") component " + std::to_string(i);
            }
          }
        }
  }
  return {};
}

}  // namespace lbhalo::testing
