#pragma once

// Halo-independent work scheduled between the start and end of a non-blocking
// exchange.

#include <cstdint>
#include <string>
#include <type_traits>
#include <utility>

#include "lbhalo/halo.hpp"

namespace lbhalo {

/// Synthetic compute kernel that reads interior sites only.
struct OverlapWorkload {
  /// Dependent multiply-adds per interior site.
  int intensity = 0;
};

/// Per interior site: v = sum_i f_i, then `intensity` rounds of v = v*c + b.
/// Returns the sum of v over the interior, so intensity 0 gives the total mass.
double synthetic_workload(const DistributionField& field, int intensity);

/// Order-dependent hash of every halo value, used to detect work that writes the halo.
std::uint64_t halo_hash(const DistributionField& field);

/// start -> work(field) -> end. With `guard` set, throws ContractViolation if
/// the work changed any halo value. Returns whatever the work returns.
template <typename Work>
auto overlap_exchange(HaloExchange& exchange, DistributionField& field, Work&& work, bool guard = false) {
  HaloToken token = exchange.exchange_nonblocking_start(field);
  const std::uint64_t before = guard ? halo_hash(field) : 0;
  auto finish = [&] {
    if (guard && halo_hash(field) != before) {
      // Close the exchange so the peers are not left waiting on this rank.
      exchange.exchange_nonblocking_end(token, field);
      throw ContractViolation("overlapped work modified the halo shell of rank " +
                              std::to_string(exchange.rank()));
    }
    exchange.exchange_nonblocking_end(token, field);
  };
  if constexpr (std::is_void_v<decltype(work(field))>) {
    std::forward<Work>(work)(field);
    finish();
  } else {
    auto result = std::forward<Work>(work)(field);
    finish();
    return result;
  }
}

/// Non-blocking exchange with the synthetic workload between start and end.
/// Returns the workload checksum.
double step_with_overlap(HaloExchange& exchange, DistributionField& field, const OverlapWorkload& workload,
                         bool guard = false);

/// Same work, run after the exchange has completed.
double step_without_overlap(HaloExchange& exchange, DistributionField& field, HaloStrategy strategy,
                            const OverlapWorkload& workload);

}  // namespace lbhalo
