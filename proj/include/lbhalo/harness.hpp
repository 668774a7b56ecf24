#pragma once

// Multi-rank orchestration: seeded initial fields, the halo correctness check,
// the two-strategy regression, and the timed benchmark loop.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lbhalo/config.hpp"
#include "lbhalo/halo.hpp"
#include "lbhalo/lattice.hpp"
#include "lbhalo/topology.hpp"

namespace lbhalo {

/// Fills the interior of one rank's field from a hash of (seed, global site,
/// component), so the global state does not depend on the decomposition. With a
/// velocity set the values are equilibria of a random density in [0.9, 1.1]
/// and velocity in [-0.05, 0.05]^3; without one they are uniform in [0, 1).
/// The halo shell is zeroed.
void seed_field(DistributionField& field, const CartesianTopology& topo, int rank, std::uint64_t seed,
                const VelocitySet* vs);

/// Everything needed to build one rank field set.
struct Decomposition {
  RunCase run_case;
  int m = 19;
  std::array<bool, 3> periodic{true, true, true};

  CartesianTopology topology() const { return CartesianTopology(run_case.proc_dims, periodic); }
};

/// Called on every rank after each exchange; lets tests corrupt a field.
using FieldHook = std::function<void(int rank, DistributionField& field)>;

/// K steps of collide, exchange, stream from the seeded state. Returns the
/// final field of every rank, indexed by rank.
std::vector<DistributionField> simulate(const Decomposition& dec, HaloStrategy strategy, int steps, double tau,
                                        std::uint64_t seed, const transport::TransportOptions& options = {});

/// Value written at interior boundary site `site` of `rank`: distinct and
/// exactly representable for every (rank, site, component).
double boundary_code(int rank, const Vec3i& site, int component, const Vec3i& local_dims, int m);

struct HaloMismatch {
  int rank = 0;
  Vec3i site = Vec3i::Zero();
  int component = 0;
  double expected = 0.0;
  double got = 0.0;
};

struct HaloCheckReport {
  HaloStrategy strategy = HaloStrategy::Blocking;
  RunCase run_case;
  std::optional<HaloMismatch> mismatch;
  std::size_t values_checked = 0;

  bool passed() const { return !mismatch.has_value(); }
  std::string describe() const;
};

/// Zeroes every field, writes boundary_code on interior boundary sites,
/// exchanges once and checks every halo site whose source neighbour exists.
HaloCheckReport run_test_halo(const Decomposition& dec, HaloStrategy strategy,
                              const transport::TransportOptions& options = {}, const FieldHook& after_exchange = {});
/// All cases and strategies of a config; stops at the first failure.
std::vector<HaloCheckReport> run_test_halo(const RunConfig& cfg, const FieldHook& after_exchange = {});

struct RegressionReport {
  RunCase run_case;
  int steps = 0;
  double max_abs_diff = 0.0;
  int rank = 0;
  Vec3i site = Vec3i::Zero();
  int component = 0;

  bool passed(double tolerance = 1.0e-12) const { return max_abs_diff <= tolerance; }
  std::string describe() const;
};

/// Largest interior difference between two per-rank field sets.
RegressionReport compare_interiors(const std::vector<DistributionField>& a, const std::vector<DistributionField>& b);

/// Runs cfg.steps physics steps under both strategies for the first case of the config.
RegressionReport run_regression(const RunConfig& cfg);

/// One timed repetition of one variant on one decomposition.
struct ResultRow {
  std::string strategy;
  Vec3i proc_dims = Vec3i::Ones();
  Vec3i local_dims = Vec3i::Ones();
  int m = 19;
  int rep = 0;
  double t_halo_total_s = 0.0;
  double t_step_total_s = 0.0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t waits = 0;
  double B_eff_MBps = 0.0;
  double updates_per_core = 0.0;
};

inline constexpr const char* kOverlapVariant = "nonblocking_overlap";

/// Fills the two derived columns from the raw ones.
void derive_columns(ResultRow& row, int iterations);

/// Variants the config asks for, by row name.
std::vector<std::string> benchmark_variants(const RunConfig& cfg);

/// Runs every case x variant x repetition. Per repetition all ranks meet at a
/// barrier before and after the timed loop; times are those of the slowest rank
/// and counters are summed over ranks.
std::vector<ResultRow> run_benchmark(const RunConfig& cfg,
                                     const std::function<void(const ResultRow&)>& on_row = {});

/// True when any case has more ranks than hardware threads.
bool oversubscribed(const RunConfig& cfg);

}  // namespace lbhalo
