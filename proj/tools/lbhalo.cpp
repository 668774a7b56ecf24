// Command-line front end: benchmarks, correctness harnesses, ping-pong and
// analytic cost-model tables.
//
// Exit codes: 0 pass, 1 test failure or runtime error, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lbhalo/config.hpp"
#include "lbhalo/harness.hpp"
#include "lbhalo/metrics.hpp"
#include "lbhalo/report.hpp"
#include "lbhalo/transport.hpp"

namespace {

using namespace lbhalo;

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

// Named flags and the config keys they set.
struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FlagSpec kFlags[] = {
    {"--global-dims", "lattice.global_dims", "Global lattice, e.g. 96x96x96"},
    {"--local-dims", "lattice.local_dims", "Per-rank interior, e.g. 16x24x32"},
    {"--procs", "lattice.proc_dims", "Process grid, e.g. 4x3x2"},
    {"-m,--velocities", "lattice.m", "Components per site (15, 19 or 27 for physics)"},
    {"--periodic", "lattice.periodic", "true, false, or three comma-separated booleans"},
    {"--tau", "lattice.tau", "BGK relaxation time"},
    {"--strategy", "halo.strategy", "blocking, nonblocking, or both comma-separated"},
    {"--iterations", "bench.iterations", "Timed halo calls per repetition"},
    {"--repetitions", "bench.repetitions", "Repetitions per case"},
    {"--warmup", "bench.warmup", "Untimed iterations before timing"},
    {"--mode", "bench.mode", "halo or physics"},
    {"--local-cubic", "sweep.local_cubic", "Cubic local sweep start:stop[:step]"},
    {"--local-sweep", "sweep.local_dims", "Local dims list, e.g. 16x24x32,24x36x48"},
    {"--proc-sweep", "sweep.proc_dims", "Process grid list, e.g. 4x3x2,4x4x3"},
    {"--overlap", "overlap.enabled", "Run the synthetic workload each step"},
    {"--intensity", "overlap.intensity", "Workload operations per interior site"},
    {"--guard", "overlap.guard", "Check that overlapped work leaves the halo untouched"},
    {"--watchdog", "transport.watchdog_seconds", "Deadlock watchdog timeout in seconds"},
    {"--latency-us", "transport.model.latency_us", "Injected per-message latency (microseconds)"},
    {"--bandwidth", "transport.model.bandwidth_MBps", "Injected link bandwidth (MBytes/s)"},
    {"--seed", "seed", "Initial-field seed"},
    {"-o,--output", "output", "Output directory"},
    {"--steps", "regression.steps", "Timesteps for regression"},
};

struct ConfigArgs {
  std::string config_file;
  std::string preset;
  std::vector<std::string> assignments;
  std::map<std::string, std::string> flags;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.config_file, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", args.preset, "Experiment preset: cubic, noncubic, strong96, strong192, overlap");
  cmd->add_option("-s,--set", args.assignments, "Override any config key: key=value (repeatable)");
  for (const auto& f : kFlags) cmd->add_option(f.flag, args.flags[f.key], f.help);
}

RunConfig build_config(const ConfigArgs& args) {
  RunConfig cfg;
  if (!args.config_file.empty()) apply_config_file(cfg, args.config_file);
  if (!args.preset.empty()) apply_preset(cfg, args.preset);
  for (const auto& f : kFlags) {
    const auto it = args.flags.find(f.key);
    if (it != args.flags.end() && !it->second.empty()) apply_setting(cfg, f.key, it->second);
  }
  for (const auto& a : args.assignments) apply_assignment(cfg, a);
  return cfg;
}

int cmd_bench(const ConfigArgs& args, bool quiet) {
  const RunConfig cfg = build_config(args);
  if (oversubscribed(cfg)) {
    std::cerr << "note: more ranks than hardware threads; timings are not representative\n";
  }
  if (!quiet) std::cout << csv_header() << "\n";
  const auto rows = run_benchmark(cfg, [&](const ResultRow& r) {
    if (!quiet) std::cout << to_csv(r) << std::endl;
  });
  const auto files = write_outputs(cfg, rows, cfg.output);
  std::cerr << "wrote " << files.size() << " files to " << cfg.output << "\n";
  return 0;
}

int cmd_test_halo(const ConfigArgs& args) {
  const RunConfig cfg = build_config(args);
  bool ok = true;
  for (const auto& r : run_test_halo(cfg)) {
    std::cout << r.describe() << "\n";
    ok = ok && r.passed();
  }
  std::cout << (ok ? "test-halo: PASS" : "test-halo: FAIL") << "\n";
  return ok ? 0 : kExitFail;
}

int cmd_regression(const ConfigArgs& args, double tolerance) {
  RunConfig cfg = build_config(args);
  const RegressionReport r = run_regression(cfg);
  std::cout << r.describe() << "\n";
  const bool ok = r.passed(tolerance);
  std::cout << (ok ? "regression: PASS" : "regression: FAIL") << "\n";
  return ok ? 0 : kExitFail;
}

int cmd_pingpong(std::size_t min_bytes, std::size_t max_bytes, std::size_t target_bytes, const std::string& output,
                 bool check) {
  if (min_bytes < 8 || max_bytes < min_bytes) throw ConfigError("need 8 <= min-bytes <= max-bytes");
  std::vector<std::size_t> sizes;
  for (std::size_t b = min_bytes; b <= max_bytes; b *= 2) sizes.push_back(b);
  const auto samples = transport::ping_pong_sweep(sizes, target_bytes);
  const std::size_t sat = transport::saturation_index(samples);
  const bool plateau = transport::plateau_holds(samples, sat);

  std::string dat = "# message_MB bandwidth_MBps\n";
  std::printf("%14s %12s %12s %14s\n", "bytes", "round_trips", "elapsed_s", "MB/s");
  for (const auto& s : samples) {
    std::printf("%14zu %12zu %12.6f %14.2f\n", s.message_bytes, s.round_trips, s.elapsed_s, s.bandwidth_MBps);
    char line[96];
    std::snprintf(line, sizeof line, "%.17g %.17g\n", static_cast<double>(s.message_bytes) / 1.0e6, s.bandwidth_MBps);
    dat += line;
  }
  std::printf("saturation at %zu bytes; plateau %s\n", samples[sat].message_bytes, plateau ? "holds" : "broken");
  if (!output.empty()) {
    std::filesystem::create_directories(output);
    std::FILE* f = std::fopen((std::filesystem::path(output) / "pingpong.dat").c_str(), "w");
    if (!f) throw Error("cannot write pingpong.dat in " + output);
    std::fputs(dat.c_str(), f);
    std::fclose(f);
  }
  return check && !plateau ? kExitFail : 0;
}

int cmd_model(double latency_us, double bandwidth, int lmin, int lmax, int m) {
  if (lmin < 1 || lmax < lmin) throw ConfigError("need 1 <= L-min <= L-max");
  const metrics::CostModelParams p{latency_us * 1.0e-6, bandwidth};
  metrics::validate(p);
  std::printf("# L halo_sites comm_work_ratio t_6msg_s t_26msg_s t_26_minus_6_s\n");
  for (int L = lmin; L <= lmax; ++L) {
    const Vec3i d = Vec3i::Constant(L);
    const double bytes = static_cast<double>(metrics::halo_sites(d)) * 8.0 * m;
    // Blocking stages carry growing planes; the non-blocking split is by group.
    std::vector<double> six;
    for (int a = 0; a < 3; ++a) {
      const double stage = static_cast<double>(stage_recv_region(d, a, BACKWARD).site_count()) * 8.0 * m;
      six.push_back(stage);
      six.push_back(stage);
    }
    std::vector<double> twenty_six;
    for (int n = 0; n < kNeighbourCount; ++n) {
      twenty_six.push_back(static_cast<double>(recv_region(d, n).site_count()) * 8.0 * m);
    }
    const double t6 = metrics::total_cost(p, six);
    const double t26 = metrics::total_cost(p, twenty_six);
    std::printf("%d %.0f %.17g %.17g %.17g %.17g\n", L, bytes / (8.0 * m), metrics::comm_work_ratio_cubic(L), t6, t26,
                t26 - t6);
  }
  return 0;
}

int cmd_verify(const std::string& dir) {
  const VerifyReport r = verify_outputs(dir);
  for (const auto& p : r.problems) std::cout << p << "\n";
  std::cout << "verify: " << r.rows_checked << " rows, " << r.summaries_checked << " summary rows: "
            << (r.passed() ? "PASS" : "FAIL") << "\n";
  return r.passed() ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Halo-exchange laboratory for lattice-Boltzmann domain decomposition"};
  app.require_subcommand(1);

  ConfigArgs bench_args, halo_args, regression_args;
  bool quiet = false;
  auto* bench = app.add_subcommand("bench", "Time halo exchanges and write CSV and plot data");
  add_config_options(bench, bench_args);
  bench->add_flag("-q,--quiet", quiet, "Do not echo rows to stdout");

  auto* test_halo = app.add_subcommand("test-halo", "Check every halo site against its source neighbour");
  add_config_options(test_halo, halo_args);

  double tolerance = 1.0e-12;
  auto* regression = app.add_subcommand("regression", "Compare blocking and non-blocking physics runs");
  add_config_options(regression, regression_args);
  regression->add_option("--tolerance", tolerance, "Maximum absolute difference per value");

  std::size_t min_bytes = 1024, max_bytes = std::size_t{8} << 20, target_bytes = std::size_t{64} << 20;
  std::string pp_output;
  bool pp_check = false;
  auto* pingpong = app.add_subcommand("pingpong", "Two-rank ping-pong bandwidth sweep");
  pingpong->add_option("--min-bytes", min_bytes, "Smallest message");
  pingpong->add_option("--max-bytes", max_bytes, "Largest message");
  pingpong->add_option("--target-bytes", target_bytes, "Bytes moved per size");
  pingpong->add_option("-o,--output", pp_output, "Directory for pingpong.dat");
  pingpong->add_flag("--check", pp_check, "Exit 1 if the curve does not plateau");

  double latency_us = 1.0, bandwidth = 350.0;
  int lmin = 1, lmax = 64, model_m = 19;
  auto* model = app.add_subcommand("model", "Analytic cost and communication/work tables for cubic subdomains");
  model->add_option("--latency-us", latency_us, "Latency l in microseconds");
  model->add_option("--bandwidth", bandwidth, "Bandwidth B in MBytes/s");
  model->add_option("--L-min", lmin, "Smallest L");
  model->add_option("--L-max", lmax, "Largest L");
  model->add_option("-m,--velocities", model_m, "Components per site");

  std::string verify_dir;
  auto* verify = app.add_subcommand("verify", "Recompute derived columns of a benchmark output directory");
  verify->add_option("dir", verify_dir, "Directory written by bench")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*bench) return cmd_bench(bench_args, quiet);
    if (*test_halo) return cmd_test_halo(halo_args);
    if (*regression) return cmd_regression(regression_args, tolerance);
    if (*pingpong) return cmd_pingpong(min_bytes, max_bytes, target_bytes, pp_output, pp_check);
    if (*model) return cmd_model(latency_us, bandwidth, lmin, lmax, model_m);
    if (*verify) return cmd_verify(verify_dir);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return 0;
}
