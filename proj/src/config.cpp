#include "lbhalo/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lbhalo/topology.hpp"

namespace lbhalo {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                    std::string(expected) + ")");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(key, value, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "true or false");
}

std::vector<Vec3i> parse_dims_list(std::string_view key, std::string_view value) {
  std::vector<Vec3i> out;
  for (auto item : split(value, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(parse_dims(item));
    } catch (const ConfigError&) {
      bad_value(key, value, "a comma-separated list like 16x24x32,24x36x48");
    }
  }
  return out;
}

std::vector<Vec3i> parse_cubic_range(std::string_view key, std::string_view value) {
  const auto parts = split(value, ':');
  if (parts.size() < 2 || parts.size() > 3) bad_value(key, value, "start:stop[:step]");
  const int start = parse_number<int>(key, parts[0]);
  const int stop = parse_number<int>(key, parts[1]);
  const int step = parts.size() == 3 ? parse_number<int>(key, parts[2]) : 1;
  if (start < 1 || stop < start || step < 1) bad_value(key, value, "1 <= start <= stop and step >= 1");
  std::vector<Vec3i> out;
  for (int L = start; L <= stop; L += step) out.push_back(Vec3i::Constant(L));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_dims(const std::vector<Vec3i>& dims) {
  std::string out;
  for (const auto& d : dims) {
    if (!out.empty()) out += ",";
    out += format_dims(d);
  }
  return out;
}

}  // namespace

std::string_view to_string(BenchMode mode) { return mode == BenchMode::Halo ? "halo" : "physics"; }

Vec3i parse_dims(std::string_view text) {
  const auto parts = split(trim(text), 'x');
  if (parts.size() != 1 && parts.size() != 3) throw ConfigError("malformed dimensions '" + std::string(text) + "'");
  Vec3i d;
  for (int a = 0; a < 3; ++a) {
    const auto p = parts[parts.size() == 1 ? 0 : static_cast<std::size_t>(a)];
    int v = 0;
    const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
    if (ec != std::errc{} || ptr != p.data() + p.size() || p.empty() || v < 1) {
      throw ConfigError("malformed dimensions '" + std::string(text) + "'");
    }
    d(a) = v;
  }
  return d;
}

std::string format_dims(const Vec3i& d) {
  return std::to_string(d.x()) + "x" + std::to_string(d.y()) + "x" + std::to_string(d.z());
}

void apply_setting(RunConfig& cfg, std::string_view key_in, std::string_view value_in) {
  const std::string key(trim(key_in));
  const std::string_view value = trim(value_in);
  const auto dims = [&] {
    try {
      return parse_dims(value);
    } catch (const ConfigError&) {
      bad_value(key, value, "dimensions like 16x24x32 or 16");
    }
  };

  if (key == "lattice.global_dims") {
    cfg.global_dims = dims();
  } else if (key == "lattice.local_dims") {
    cfg.local_dims = dims();
  } else if (key == "lattice.proc_dims") {
    cfg.proc_dims = dims();
  } else if (key == "lattice.m") {
    cfg.m = parse_number<int>(key, value);
    if (cfg.m < 1 || cfg.m > kMaxVelocities) bad_value(key, value, "1..27");
  } else if (key == "lattice.periodic") {
    const auto parts = split(value, ',');
    if (parts.size() == 1) {
      cfg.periodic.fill(parse_bool(key, parts[0]));
    } else if (parts.size() == 3) {
      for (std::size_t a = 0; a < 3; ++a) cfg.periodic[a] = parse_bool(key, parts[a]);
    } else {
      bad_value(key, value, "one boolean or three comma-separated booleans");
    }
  } else if (key == "lattice.tau") {
    cfg.tau = parse_number<double>(key, value);
    if (!(cfg.tau > 0.5)) bad_value(key, value, "tau > 0.5");
  } else if (key == "halo.strategy") {
    std::vector<HaloStrategy> list;
    for (auto item : split(value, ',')) {
      if (!item.empty()) list.push_back(parse_strategy(item));
    }
    if (list.empty()) bad_value(key, value, "blocking and/or nonblocking");
    cfg.strategies = list;
  } else if (key == "bench.iterations") {
    cfg.iterations = parse_number<int>(key, value);
    if (cfg.iterations < 1) bad_value(key, value, "at least 1");
  } else if (key == "bench.repetitions") {
    cfg.repetitions = parse_number<int>(key, value);
    if (cfg.repetitions < 1) bad_value(key, value, "at least 1");
  } else if (key == "bench.warmup") {
    cfg.warmup = parse_number<int>(key, value);
    if (cfg.warmup < 0) bad_value(key, value, "a non-negative count");
  } else if (key == "bench.mode") {
    if (value == "halo") {
      cfg.mode = BenchMode::Halo;
    } else if (value == "physics") {
      cfg.mode = BenchMode::Physics;
    } else {
      bad_value(key, value, "halo or physics");
    }
  } else if (key == "bench.preset") {
    apply_preset(cfg, value);
  } else if (key == "sweep.local_dims") {
    cfg.sweep_local_dims = parse_dims_list(key, value);
  } else if (key == "sweep.local_cubic") {
    cfg.sweep_local_dims = parse_cubic_range(key, value);
  } else if (key == "sweep.proc_dims") {
    cfg.sweep_proc_dims = parse_dims_list(key, value);
  } else if (key == "overlap.enabled") {
    cfg.overlap_enabled = parse_bool(key, value);
  } else if (key == "overlap.intensity") {
    cfg.overlap_intensity = parse_number<int>(key, value);
    if (cfg.overlap_intensity < 0) bad_value(key, value, "a non-negative count");
  } else if (key == "overlap.guard") {
    cfg.overlap_guard = parse_bool(key, value);
  } else if (key == "transport.watchdog_seconds") {
    cfg.transport.watchdog_seconds = parse_number<double>(key, value);
    if (!(cfg.transport.watchdog_seconds > 0.0)) bad_value(key, value, "a positive number of seconds");
  } else if (key == "transport.model") {
    if (value == "off" || value == "none") {
      cfg.transport.model.reset();
    } else {
      bad_value(key, value, "off (set transport.model.latency_us / bandwidth_MBps to enable)");
    }
  } else if (key == "transport.model.latency_us") {
    if (!cfg.transport.model) cfg.transport.model.emplace();
    const double us = parse_number<double>(key, value);
    if (!(us >= 0.0)) bad_value(key, value, "a non-negative latency");
    cfg.transport.model->latency_s = us * 1.0e-6;
  } else if (key == "transport.model.bandwidth_MBps") {
    if (!cfg.transport.model) cfg.transport.model.emplace();
    const double b = parse_number<double>(key, value);
    if (!(b > 0.0)) bad_value(key, value, "a positive bandwidth");
    cfg.transport.model->bandwidth_MBps = b;
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "output") {
    if (value.empty()) bad_value(key, value, "a directory path");
    cfg.output = std::string(value);
  } else if (key == "regression.steps") {
    cfg.steps = parse_number<int>(key, value);
    if (cfg.steps < 0) bad_value(key, value, "a non-negative count");
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

void apply_assignment(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  }
  apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    const auto hash = line.find('#');
    line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    try {
      apply_assignment(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    apply_config_text(cfg, text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> preset_names() { return {"cubic", "noncubic", "strong96", "strong192", "overlap"}; }

void apply_preset(RunConfig& cfg, std::string_view name) {
  cfg.sweep_local_dims.clear();
  cfg.sweep_proc_dims.clear();
  cfg.global_dims.reset();
  cfg.local_dims.reset();
  cfg.proc_dims.reset();
  if (name == "cubic") {
    cfg.proc_dims = Vec3i(4, 3, 2);
    for (int L = 16; L <= 88; L += 8) cfg.sweep_local_dims.push_back(Vec3i::Constant(L));
  } else if (name == "noncubic") {
    cfg.proc_dims = Vec3i(4, 3, 2);
    for (int x : {16, 24, 28, 32, 36, 40, 44, 48, 52, 56}) cfg.sweep_local_dims.emplace_back(x, x * 3 / 2, 2 * x);
  } else if (name == "strong96") {
    cfg.global_dims = Vec3i::Constant(96);
    cfg.sweep_proc_dims = {{4, 3, 2}, {4, 4, 3}, {6, 4, 3}, {6, 4, 4}, {6, 6, 4}, {8, 6, 4}};
  } else if (name == "strong192") {
    cfg.global_dims = Vec3i::Constant(192);
    cfg.sweep_proc_dims = {{4, 3, 2}, {4, 4, 3}, {6, 4, 4}, {8, 6, 4}, {8, 8, 6}, {12, 8, 6}, {12, 8, 8}};
  } else if (name == "overlap") {
    // The 256x256x128 system scaled down by four per axis.
    cfg.global_dims = Vec3i(64, 64, 32);
    cfg.sweep_proc_dims = {{1, 1, 1}, {2, 1, 1}, {2, 2, 1}, {2, 2, 2}};
    cfg.mode = BenchMode::Physics;
    cfg.overlap_enabled = true;
    if (cfg.overlap_intensity == 0) cfg.overlap_intensity = 64;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  cfg.preset = std::string(name);
}

std::vector<RunCase> expand_cases(const RunConfig& cfg) {
  if (cfg.mode == BenchMode::Physics) {
    VelocitySet::with_count(cfg.m);
    if (!(cfg.periodic[0] && cfg.periodic[1] && cfg.periodic[2])) {
      throw ConfigError("physics mode needs a fully periodic lattice (no wall boundary conditions are modelled)");
    }
  }
  const bool have_local = cfg.local_dims.has_value() || !cfg.sweep_local_dims.empty();
  if (cfg.global_dims && have_local) {
    throw ConfigError("give either lattice.global_dims or local dims with proc dims, not both");
  }
  if (!cfg.global_dims && !have_local) {
    throw ConfigError("no lattice size: set lattice.global_dims, lattice.local_dims or a sweep");
  }

  std::vector<Vec3i> procs = cfg.sweep_proc_dims;
  if (procs.empty()) procs.push_back(cfg.proc_dims.value_or(Vec3i::Ones()));
  std::vector<Vec3i> locals = cfg.sweep_local_dims;
  if (locals.empty() && cfg.local_dims) locals.push_back(*cfg.local_dims);

  std::vector<RunCase> cases;
  for (const Vec3i& p : procs) {
    if ((p.array() < 1).any()) throw ConfigError("process dimensions must be positive");
    if (cfg.global_dims) {
      cases.push_back({p, decompose(*cfg.global_dims, p)});
    } else {
      for (const Vec3i& l : locals) cases.push_back({p, l});
    }
  }
  return cases;
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto opt_dims = [](const std::optional<Vec3i>& d) { return d ? format_dims(*d) : std::string(); };
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  out.emplace_back("lattice.global_dims", opt_dims(cfg.global_dims));
  out.emplace_back("lattice.local_dims", opt_dims(cfg.local_dims));
  out.emplace_back("lattice.proc_dims", opt_dims(cfg.proc_dims));
  out.emplace_back("lattice.m", std::to_string(cfg.m));
  out.emplace_back("lattice.periodic", b(cfg.periodic[0]) + "," + b(cfg.periodic[1]) + "," + b(cfg.periodic[2]));
  out.emplace_back("lattice.tau", format_double(cfg.tau));
  std::string strategies;
  for (auto s : cfg.strategies) strategies += (strategies.empty() ? "" : ",") + std::string(to_string(s));
  out.emplace_back("halo.strategy", strategies);
  out.emplace_back("bench.iterations", std::to_string(cfg.iterations));
  out.emplace_back("bench.repetitions", std::to_string(cfg.repetitions));
  out.emplace_back("bench.warmup", std::to_string(cfg.warmup));
  out.emplace_back("bench.mode", std::string(to_string(cfg.mode)));
  out.emplace_back("bench.preset", cfg.preset);
  out.emplace_back("sweep.local_dims", join_dims(cfg.sweep_local_dims));
  out.emplace_back("sweep.proc_dims", join_dims(cfg.sweep_proc_dims));
  out.emplace_back("overlap.enabled", b(cfg.overlap_enabled));
  out.emplace_back("overlap.intensity", std::to_string(cfg.overlap_intensity));
  out.emplace_back("overlap.guard", b(cfg.overlap_guard));
  out.emplace_back("transport.watchdog_seconds", format_double(cfg.transport.watchdog_seconds));
  if (cfg.transport.model) {
    out.emplace_back("transport.model.latency_us", format_double(cfg.transport.model->latency_s * 1.0e6));
    out.emplace_back("transport.model.bandwidth_MBps", format_double(cfg.transport.model->bandwidth_MBps));
  } else {
    out.emplace_back("transport.model", "off");
  }
  out.emplace_back("seed", std::to_string(cfg.seed));
  out.emplace_back("output", cfg.output);
  out.emplace_back("regression.steps", std::to_string(cfg.steps));
  return out;
}

}  // namespace lbhalo
