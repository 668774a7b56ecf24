#include "lbhalo/metrics.hpp"

#include <cmath>
#include <numeric>

#include "lbhalo/halo.hpp"

namespace lbhalo::metrics {

void validate(const CostModelParams& p) {
  if (!(p.latency_s >= 0.0) || !(p.bandwidth_MBps > 0.0)) {
    throw ConfigError("cost model needs latency >= 0 and bandwidth > 0");
  }
}

double message_cost(const CostModelParams& p, double bytes) {
  validate(p);
  if (bytes < 0.0) throw DomainError("message size must be non-negative");
  return p.latency_s + bytes / (p.bandwidth_MBps * 1.0e6);
}

double total_cost(const CostModelParams& p, std::span<const double> message_bytes) {
  double t = 0.0;
  for (double m : message_bytes) t += message_cost(p, m);
  return t;
}

double effective_bandwidth(const Eigen::Vector3i& local_dims, int m, double t_exchange) {
  if (!(t_exchange > 0.0)) throw DomainError("exchange time must be positive");
  const double sites = static_cast<double>(halo_site_count(local_dims));
  return sites * 8.0 * m / t_exchange / 1.0e6;
}

double updates_per_core(const Eigen::Vector3i& local_dims, double t_exchange) {
  if (!(t_exchange > 0.0)) throw DomainError("exchange time must be positive");
  return local_dims.cast<double>().prod() / t_exchange;
}

Series speedup(const Series& times, int base_p) {
  const auto it = times.find(base_p);
  if (it == times.end()) throw ConfigError("no runtime for base p = " + std::to_string(base_p));
  return speedup_from(times, it->second);
}

Series speedup_from(const Series& times, double t1) {
  Series out;
  for (const auto& [p, t] : times) out[p] = t1 / t;
  return out;
}

std::map<std::string, Series> speedup(const std::map<std::string, Series>& times, SpeedupBase mode,
                                      const std::string& reference) {
  std::map<std::string, Series> out;
  if (mode == SpeedupBase::PerVersion) {
    for (const auto& [name, series] : times) {
      if (series.empty()) continue;
      out[name] = speedup(series, series.begin()->first);
    }
    return out;
  }
  const auto ref = times.find(reference);
  if (ref == times.end() || ref->second.empty()) {
    throw ConfigError("common-T1 speedup needs a '" + reference + "' series");
  }
  const double t1 = ref->second.begin()->second;
  for (const auto& [name, series] : times) out[name] = speedup_from(series, t1);
  return out;
}

Series efficiency(const Series& speedups, int base_p) {
  if (base_p <= 0) throw ConfigError("base context count must be positive");
  Series out;
  for (const auto& [p, s] : speedups) out[p] = s / (static_cast<double>(p) / base_p);
  return out;
}

double mean(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("mean of an empty sample");
  return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

double stddev(std::span<const double> samples) {
  const double mu = mean(samples);
  double sq = 0.0;
  for (double x : samples) sq += (x - mu) * (x - mu);
  return std::sqrt(sq / static_cast<double>(samples.size()));
}

Summary summarize(std::span<const double> samples) { return {mean(samples), stddev(samples)}; }

}  // namespace lbhalo::metrics
