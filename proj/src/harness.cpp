#include "lbhalo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "lbhalo/metrics.hpp"
#include "lbhalo/overlap.hpp"
#include "lbhalo/transport.hpp"

namespace lbhalo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// SplitMix64 finaliser.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_uniform(std::uint64_t seed, std::uint64_t site, std::uint64_t k) {
  const std::uint64_t bits = mix(mix(mix(seed) ^ site) ^ k);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::optional<VelocitySet> velocity_set_if_known(int m) {
  if (m == 15 || m == 19 || m == 27) return VelocitySet::with_count(m);
  return std::nullopt;
}

std::string site_string(const Vec3i& s) {
  return "(" + std::to_string(s.x()) + "," + std::to_string(s.y()) + "," + std::to_string(s.z()) + ")";
}

std::string case_string(const RunCase& c) {
  return "procs " + format_dims(c.proc_dims) + ", local " + format_dims(c.local_dims);
}

std::vector<DistributionField> seeded_fields(const Decomposition& dec, std::uint64_t seed, const VelocitySet* vs) {
  const CartesianTopology topo = dec.topology();
  std::vector<DistributionField> fields;
  fields.reserve(static_cast<std::size_t>(topo.size()));
  for (int r = 0; r < topo.size(); ++r) {
    fields.emplace_back(dec.run_case.local_dims, dec.m);
    seed_field(fields.back(), topo, r, seed, vs);
  }
  return fields;
}

}  // namespace

void seed_field(DistributionField& field, const CartesianTopology& topo, int rank, std::uint64_t seed,
                const VelocitySet* vs) {
  if (vs && vs->size() != field.components()) {
    throw ConfigError("field component count does not match the velocity model");
  }
  std::fill(field.data().begin(), field.data().end(), 0.0);
  const Vec3i& L = field.local_dims();
  const Vec3i origin = topo.coords_of(rank).cwiseProduct(L);
  const Vec3i G = topo.dims().cwiseProduct(L);
  const int m = field.components();
  for (int x = 1; x <= L.x(); ++x)
    for (int y = 1; y <= L.y(); ++y)
      for (int z = 1; z <= L.z(); ++z) {
        const Vec3i g = origin + Vec3i(x - 1, y - 1, z - 1);
        const auto site = static_cast<std::uint64_t>((static_cast<std::int64_t>(g.x()) * G.y() + g.y()) * G.z() + g.z());
        auto f = field.site(x, y, z);
        if (vs) {
          const double rho = 0.9 + 0.2 * unit_uniform(seed, site, 0);
          const Vec3d u(0.1 * unit_uniform(seed, site, 1) - 0.05, 0.1 * unit_uniform(seed, site, 2) - 0.05,
                        0.1 * unit_uniform(seed, site, 3) - 0.05);
          const SiteVector feq = equilibrium(rho, u, *vs);
          for (int i = 0; i < m; ++i) f[static_cast<std::size_t>(i)] = feq(i);
        } else {
          for (int i = 0; i < m; ++i) f[static_cast<std::size_t>(i)] = unit_uniform(seed, site, 16 + static_cast<std::uint64_t>(i));
        }
      }
}

std::vector<DistributionField> simulate(const Decomposition& dec, HaloStrategy strategy, int steps, double tau,
                                        std::uint64_t seed, const transport::TransportOptions& options) {
  if (steps < 0) throw ConfigError("step count must be non-negative");
  const VelocitySet vs = VelocitySet::with_count(dec.m);
  const CartesianTopology topo = dec.topology();
  std::vector<DistributionField> fields = seeded_fields(dec, seed, &vs);
  transport::Fabric fabric(topo.size(), options);
  transport::run_ranks(fabric, [&](transport::Endpoint& ep) {
    DistributionField& f = fields[static_cast<std::size_t>(ep.rank())];
    HaloExchange exchange(topo, ep, dec.run_case.local_dims, dec.m);
    for (int s = 0; s < steps; ++s) {
      collide(f, vs, tau);
      exchange.exchange(f, strategy);
      stream(f, vs);
    }
  });
  return fields;
}

double boundary_code(int rank, const Vec3i& site, int component, const Vec3i& L, int m) {
  const Vec3i S = L.array() + 2;
  const std::uint64_t idx =
      ((((static_cast<std::uint64_t>(rank) * static_cast<std::uint64_t>(S.x()) + static_cast<std::uint64_t>(site.x())) *
             static_cast<std::uint64_t>(S.y()) +
         static_cast<std::uint64_t>(site.y())) *
            static_cast<std::uint64_t>(S.z()) +
        static_cast<std::uint64_t>(site.z())) *
           static_cast<std::uint64_t>(m) +
       static_cast<std::uint64_t>(component));
  return static_cast<double>(idx + 1);
}

std::string HaloCheckReport::describe() const {
  std::string out = std::string(to_string(strategy)) + ", " + case_string(run_case) + ": ";
  if (passed()) return out + "pass (" + std::to_string(values_checked) + " values checked)";
  char buf[160];
  std::snprintf(buf, sizeof buf, "component %d expected %.17g got %.17g", mismatch->component, mismatch->expected,
                mismatch->got);
  return out + "FAIL at rank " + std::to_string(mismatch->rank) + " site " + site_string(mismatch->site) + " " + buf;
}

HaloCheckReport run_test_halo(const Decomposition& dec, HaloStrategy strategy,
                              const transport::TransportOptions& options, const FieldHook& after_exchange) {
  const CartesianTopology topo = dec.topology();
  const Vec3i L = dec.run_case.local_dims;
  const int m = dec.m;
  const auto on_boundary = [&](const Vec3i& s) { return (s.array() == 1).any() || (s.array() == L.array()).any(); };

  std::vector<DistributionField> fields;
  fields.reserve(static_cast<std::size_t>(topo.size()));
  for (int r = 0; r < topo.size(); ++r) {
    fields.emplace_back(L, m);
    auto& f = fields.back();
    for (int x = 1; x <= L.x(); ++x)
      for (int y = 1; y <= L.y(); ++y)
        for (int z = 1; z <= L.z(); ++z) {
          const Vec3i s(x, y, z);
          if (!on_boundary(s)) continue;
          for (int i = 0; i < m; ++i) f(x, y, z, i) = boundary_code(r, s, i, L, m);
        }
  }

  transport::Fabric fabric(topo.size(), options);
  transport::run_ranks(fabric, [&](transport::Endpoint& ep) {
    auto& f = fields[static_cast<std::size_t>(ep.rank())];
    HaloExchange exchange(topo, ep, L, m);
    exchange.exchange(f, strategy);
    if (after_exchange) after_exchange(ep.rank(), f);
  });

  HaloCheckReport report;
  report.strategy = strategy;
  report.run_case = dec.run_case;
  for (int r = 0; r < topo.size(); ++r) {
    const auto& f = fields[static_cast<std::size_t>(r)];
    const NeighbourTable table = NeighbourTable::build(topo, r);
    for (int x = 0; x <= L.x() + 1; ++x)
      for (int y = 0; y <= L.y() + 1; ++y)
        for (int z = 0; z <= L.z() + 1; ++z) {
          const Vec3i h(x, y, z);
          Vec3i d = Vec3i::Zero();
          for (int a = 0; a < 3; ++a) d(a) = h(a) == 0 ? -1 : (h(a) == L(a) + 1 ? 1 : 0);
          int source = r;
          Vec3i src_site = h;
          if (!d.isZero()) {
            source = table.full[static_cast<std::size_t>(neighbour_index(d))];
            if (source == kNoNeighbour) continue;
            src_site = h - d.cwiseProduct(L);
          }
          for (int i = 0; i < m; ++i) {
            const double expected = on_boundary(src_site) ? boundary_code(source, src_site, i, L, m) : 0.0;
            const double got = f(x, y, z, i);
            ++report.values_checked;
            if (got != expected) {
              report.mismatch = HaloMismatch{r, h, i, expected, got};
              return report;
            }
          }
        }
  }
  return report;
}

std::vector<HaloCheckReport> run_test_halo(const RunConfig& cfg, const FieldHook& after_exchange) {
  std::vector<HaloCheckReport> reports;
  for (const RunCase& c : expand_cases(cfg)) {
    const Decomposition dec{c, cfg.m, cfg.periodic};
    for (HaloStrategy s : cfg.strategies) {
      reports.push_back(run_test_halo(dec, s, cfg.transport, after_exchange));
      if (!reports.back().passed()) return reports;
    }
  }
  return reports;
}

std::string RegressionReport::describe() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "max |delta| = %.17g", max_abs_diff);
  std::string out = case_string(run_case) + ", " + std::to_string(steps) + " steps: " + buf;
  if (max_abs_diff > 0.0) {
    out += " at rank " + std::to_string(rank) + " site " + site_string(site) + " component " + std::to_string(component);
  }
  return out;
}

RegressionReport compare_interiors(const std::vector<DistributionField>& a, const std::vector<DistributionField>& b) {
  if (a.size() != b.size()) throw ConfigError("field sets have different rank counts");
  RegressionReport report;
  for (std::size_t r = 0; r < a.size(); ++r) {
    const auto& fa = a[r];
    const auto& fb = b[r];
    if (fa.local_dims() != fb.local_dims() || fa.components() != fb.components()) {
      throw ConfigError("field sets have different shapes");
    }
    const Vec3i& L = fa.local_dims();
    for (int x = 1; x <= L.x(); ++x)
      for (int y = 1; y <= L.y(); ++y)
        for (int z = 1; z <= L.z(); ++z)
          for (int i = 0; i < fa.components(); ++i) {
            const double diff = std::abs(fa(x, y, z, i) - fb(x, y, z, i));
            // NaN compares false; treat it as an infinite difference.
            if (diff > report.max_abs_diff || std::isnan(diff)) {
              report.max_abs_diff = std::isnan(diff) ? INFINITY : diff;
              report.rank = static_cast<int>(r);
              report.site = Vec3i(x, y, z);
              report.component = i;
            }
          }
  }
  return report;
}

RegressionReport run_regression(const RunConfig& cfg) {
  const auto cases = expand_cases(cfg);
  const Decomposition dec{cases.front(), cfg.m, cfg.periodic};
  const auto blocking = simulate(dec, HaloStrategy::Blocking, cfg.steps, cfg.tau, cfg.seed, cfg.transport);
  const auto nonblocking = simulate(dec, HaloStrategy::Nonblocking, cfg.steps, cfg.tau, cfg.seed, cfg.transport);
  RegressionReport report = compare_interiors(blocking, nonblocking);
  report.run_case = dec.run_case;
  report.steps = cfg.steps;
  return report;
}

void derive_columns(ResultRow& row, int iterations) {
  const double t = row.t_halo_total_s / iterations;
  row.B_eff_MBps = t > 0.0 ? metrics::effective_bandwidth(row.local_dims, row.m, t) : 0.0;
  row.updates_per_core = t > 0.0 ? metrics::updates_per_core(row.local_dims, t) : 0.0;
}

std::vector<std::string> benchmark_variants(const RunConfig& cfg) {
  std::vector<std::string> out;
  for (HaloStrategy s : cfg.strategies) out.emplace_back(to_string(s));
  if (cfg.overlap_enabled) out.emplace_back(kOverlapVariant);
  return out;
}

bool oversubscribed(const RunConfig& cfg) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  for (const RunCase& c : expand_cases(cfg)) {
    if (static_cast<unsigned>(c.ranks()) > hw) return true;
  }
  return false;
}

std::vector<ResultRow> run_benchmark(const RunConfig& cfg, const std::function<void(const ResultRow&)>& on_row) {
  const auto cases = expand_cases(cfg);
  const auto variants = benchmark_variants(cfg);
  const std::optional<VelocitySet> vs = velocity_set_if_known(cfg.m);
  const bool physics = cfg.mode == BenchMode::Physics;
  const auto reps = static_cast<std::size_t>(cfg.repetitions);

  struct Sample {
    double t_halo = 0.0;
    double t_step = 0.0;
    HaloCounters counters;
  };

  std::vector<ResultRow> rows;
  for (const RunCase& c : cases) {
    const Decomposition dec{c, cfg.m, cfg.periodic};
    const CartesianTopology topo = dec.topology();
    for (const std::string& variant : variants) {
      const bool overlapped = variant == kOverlapVariant;
      const HaloStrategy strategy = overlapped ? HaloStrategy::Nonblocking : parse_strategy(variant);
      std::vector<DistributionField> fields = seeded_fields(dec, cfg.seed, vs ? &*vs : nullptr);
      std::vector<std::vector<Sample>> samples(static_cast<std::size_t>(c.ranks()), std::vector<Sample>(reps));
      std::vector<double> sinks(static_cast<std::size_t>(c.ranks()), 0.0);

      transport::Fabric fabric(c.ranks(), cfg.transport);
      transport::run_ranks(fabric, [&](transport::Endpoint& ep) {
        const auto r = static_cast<std::size_t>(ep.rank());
        DistributionField& f = fields[r];
        HaloExchange exchange(topo, ep, c.local_dims, cfg.m);
        double sink = 0.0;

        const auto step = [&](double& t_halo) {
          if (physics) collide(f, *vs, cfg.tau);
          if (overlapped) {
            double t_work = 0.0;
            const auto t0 = Clock::now();
            sink += overlap_exchange(
                exchange, f,
                [&](const DistributionField& field) {
                  const auto w0 = Clock::now();
                  const double v = synthetic_workload(field, cfg.overlap_intensity);
                  t_work = seconds_since(w0);
                  return v;
                },
                cfg.overlap_guard);
            t_halo += seconds_since(t0) - t_work;
          } else {
            const auto t0 = Clock::now();
            exchange.exchange(f, strategy);
            t_halo += seconds_since(t0);
            if (cfg.overlap_enabled) sink += synthetic_workload(f, cfg.overlap_intensity);
          }
          if (physics) stream(f, *vs);
        };

        double unused = 0.0;
        for (int w = 0; w < cfg.warmup; ++w) step(unused);
        for (std::size_t rep = 0; rep < reps; ++rep) {
          Sample& s = samples[r][rep];
          const HaloCounters before = exchange.counters();
          ep.barrier();
          const auto t0 = Clock::now();
          for (int it = 0; it < cfg.iterations; ++it) step(s.t_halo);
          ep.barrier();
          s.t_step = seconds_since(t0);
          const HaloCounters& after = exchange.counters();
          s.counters.messages_sent = after.messages_sent - before.messages_sent;
          s.counters.bytes_sent = after.bytes_sent - before.bytes_sent;
          s.counters.barriers = after.barriers - before.barriers;
        }
        sinks[r] = sink;
      });

      for (std::size_t rep = 0; rep < reps; ++rep) {
        ResultRow row;
        row.strategy = variant;
        row.proc_dims = c.proc_dims;
        row.local_dims = c.local_dims;
        row.m = cfg.m;
        row.rep = static_cast<int>(rep);
        for (const auto& per_rank : samples) {
          const Sample& s = per_rank[rep];
          row.t_halo_total_s = std::max(row.t_halo_total_s, s.t_halo);
          row.t_step_total_s = std::max(row.t_step_total_s, s.t_step);
          row.messages_sent += s.counters.messages_sent;
          row.bytes_sent += s.counters.bytes_sent;
          row.waits += s.counters.barriers;
        }
        derive_columns(row, cfg.iterations);
        if (on_row) on_row(row);
        rows.push_back(row);
      }
      // Keeps the workload results observable so the compiler cannot drop them.
      volatile double keep = 0.0;
      for (double v : sinks) keep = keep + v;
    }
  }
  return rows;
}

}  // namespace lbhalo
