#pragma once

// Derived performance quantities: the latency/bandwidth message cost model,
// communication-to-work ratios, effective bandwidth, update rate, speedup,
// parallel efficiency and population standard deviation.
//
// Units are SI internally (seconds, bytes); MBytes are 1e6 bytes.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lbhalo/errors.hpp"
#include "lbhalo/transport.hpp"

namespace lbhalo::metrics {

/// l (seconds) and B (MBytes/s).
using CostModelParams = transport::CostModel;

void validate(const CostModelParams& p);

/// t = l + m/B.
double message_cost(const CostModelParams& p, double bytes);
/// Sum of message_cost over the list.
double total_cost(const CostModelParams& p, std::span<const double> message_bytes);

/// (a+2)(b+2)(c+2) - abc, for any scalar type.
template <typename Derived>
typename Derived::Scalar halo_sites(const Eigen::MatrixBase<Derived>& dims) {
  using S = typename Derived::Scalar;
  return (dims.array() + S(2)).prod() - dims.prod();
}

/// Halo sites over interior sites: (2bc+2ac+2ab+4a+4b+4c+8)/(abc).
template <typename Derived>
double comm_work_ratio(const Eigen::MatrixBase<Derived>& dims) {
  const Eigen::Vector3d d = dims.template cast<double>();
  const double a = d.x(), b = d.y(), c = d.z();
  return (2 * b * c + 2 * a * c + 2 * a * b + 4 * a + 4 * b + 4 * c + 8) / (a * b * c);
}

/// (6L^2 + 12L + 8) / L^3.
inline double comm_work_ratio_cubic(double L) { return (6 * L * L + 12 * L + 8) / (L * L * L); }

/// Halo bytes moved per exchange over the exchange time, in MBytes/s.
double effective_bandwidth(const Eigen::Vector3i& local_dims, int m, double t_exchange);
/// Interior sites per second of exchange time.
double updates_per_core(const Eigen::Vector3i& local_dims, double t_exchange);

/// Runtimes or speedups keyed by context count p.
using Series = std::map<int, double>;

enum class SpeedupBase { PerVersion, CommonT1 };

/// S(p) = T(base_p) / T(p). Throws ConfigError if base_p is missing.
Series speedup(const Series& times, int base_p);
/// S(p) = t1 / T(p).
Series speedup_from(const Series& times, double t1);

/// Speedup for several code versions. PerVersion divides each series by its own
/// smallest-p time; CommonT1 divides every series by the smallest-p time of
/// `reference`. Throws ConfigError if the reference series is missing.
std::map<std::string, Series> speedup(const std::map<std::string, Series>& times, SpeedupBase mode,
                                      const std::string& reference = "blocking");

/// E(p) = S(p) / (p / base_p).
Series efficiency(const Series& speedups, int base_p);

double mean(std::span<const double> samples);
/// Population standard deviation sqrt((1/N) sum (x - mean)^2). Throws DomainError for N = 0.
double stddev(std::span<const double> samples);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
};

Summary summarize(std::span<const double> samples);

/// Applies `derive` to each sample first, then summarises the derived values.
template <typename F>
Summary summarize_derived(std::span<const double> samples, F derive) {
  std::vector<double> derived;
  derived.reserve(samples.size());
  for (double s : samples) derived.push_back(derive(s));
  return summarize(derived);
}

}  // namespace lbhalo::metrics
