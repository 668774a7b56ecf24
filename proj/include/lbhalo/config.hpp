#pragma once

// Run configuration: a flat key=value schema shared by the config file and the
// command line, plus the named experiment presets.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lbhalo/halo.hpp"
#include "lbhalo/transport.hpp"

namespace lbhalo {

/// `halo` times the exchange loop alone; `physics` runs collide, exchange and
/// stream every iteration.
enum class BenchMode { Halo, Physics };

std::string_view to_string(BenchMode mode);

/// One decomposition to run: process grid and per-rank interior dims.
struct RunCase {
  Vec3i proc_dims;
  Vec3i local_dims;

  int ranks() const { return proc_dims.prod(); }
  Vec3i global_dims() const { return proc_dims.cwiseProduct(local_dims); }
};

struct RunConfig {
  std::optional<Vec3i> global_dims;
  std::optional<Vec3i> local_dims;
  std::optional<Vec3i> proc_dims;
  int m = 19;
  std::array<bool, 3> periodic{true, true, true};
  double tau = 1.0;

  std::vector<HaloStrategy> strategies{HaloStrategy::Blocking, HaloStrategy::Nonblocking};
  int iterations = 2000;
  int repetitions = 5;
  int warmup = 10;
  BenchMode mode = BenchMode::Halo;

  bool overlap_enabled = false;
  int overlap_intensity = 0;
  bool overlap_guard = false;

  transport::TransportOptions transport;
  std::uint64_t seed = 1;
  std::string output = "results";

  /// Name of the preset that filled the sweep lists, if any.
  std::string preset;
  std::vector<Vec3i> sweep_local_dims;
  std::vector<Vec3i> sweep_proc_dims;

  /// Timesteps for the regression subcommand.
  int steps = 10;
};

/// Sets one key. Throws ConfigError for an unknown key or a malformed value.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);
/// Splits "key=value" and applies it.
void apply_assignment(RunConfig& cfg, std::string_view assignment);
/// Applies every `key = value` line; '#' starts a comment.
void apply_config_text(RunConfig& cfg, std::string_view text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Fills the sweep lists from a named preset: cubic, noncubic, strong96, strong192, overlap.
void apply_preset(RunConfig& cfg, std::string_view name);
std::vector<std::string> preset_names();

/// The decompositions a config describes, validated.
/// Throws ConfigError if the sizes are inconsistent or do not divide.
std::vector<RunCase> expand_cases(const RunConfig& cfg);

/// Every key with its current value, in schema order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

/// "16x24x32", or a single number for a cubic value.
Vec3i parse_dims(std::string_view text);
std::string format_dims(const Vec3i& d);

}  // namespace lbhalo
