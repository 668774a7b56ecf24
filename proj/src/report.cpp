#include "lbhalo/report.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace lbhalo {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_int(const std::string& s, const char* column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(std::string("bad integer in column ") + column + ": '" + s + "'");
  }
  return v;
}

double parse_double(const std::string& s, const char* column) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError(std::string("bad number in column ") + column + ": '" + s + "'");
  }
  return v;
}

void write_file(const fs::path& path, const std::string& text, std::vector<fs::path>& written) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
  written.push_back(path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string summary_key(const ResultRow& r) {
  return r.strategy + "|" + format_dims(r.proc_dims) + "|" + format_dims(r.local_dims) + "|" + std::to_string(r.m);
}

}  // namespace

std::string csv_header() {
  return "strategy,Px,Py,Pz,Lx,Ly,Lz,m,rep,t_halo_total_s,t_step_total_s,bytes_sent,messages_sent,waits,"
         "B_eff_MBps,updates_per_core";
}

std::string to_csv(const ResultRow& r) {
  std::string out = r.strategy;
  for (int a = 0; a < 3; ++a) out += "," + std::to_string(r.proc_dims(a));
  for (int a = 0; a < 3; ++a) out += "," + std::to_string(r.local_dims(a));
  out += "," + std::to_string(r.m) + "," + std::to_string(r.rep);
  out += "," + fmt(r.t_halo_total_s) + "," + fmt(r.t_step_total_s);
  out += "," + std::to_string(r.bytes_sent) + "," + std::to_string(r.messages_sent) + "," + std::to_string(r.waits);
  out += "," + fmt(r.B_eff_MBps) + "," + fmt(r.updates_per_core);
  return out;
}

ResultRow parse_csv_row(std::string_view line) {
  const auto f = split_csv(line);
  if (f.size() != 16) {
    throw ConfigError("expected 16 columns, got " + std::to_string(f.size()) + " in '" + std::string(line) + "'");
  }
  ResultRow r;
  r.strategy = f[0];
  for (int a = 0; a < 3; ++a) {
    r.proc_dims(a) = parse_int<int>(f[static_cast<std::size_t>(1 + a)], "P");
    r.local_dims(a) = parse_int<int>(f[static_cast<std::size_t>(4 + a)], "L");
  }
  r.m = parse_int<int>(f[7], "m");
  r.rep = parse_int<int>(f[8], "rep");
  r.t_halo_total_s = parse_double(f[9], "t_halo_total_s");
  r.t_step_total_s = parse_double(f[10], "t_step_total_s");
  r.bytes_sent = parse_int<std::uint64_t>(f[11], "bytes_sent");
  r.messages_sent = parse_int<std::uint64_t>(f[12], "messages_sent");
  r.waits = parse_int<std::uint64_t>(f[13], "waits");
  r.B_eff_MBps = parse_double(f[14], "B_eff_MBps");
  r.updates_per_core = parse_double(f[15], "updates_per_core");
  return r;
}

std::vector<SummaryRow> summarize_rows(const std::vector<ResultRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    const std::string key = summary_key(r);
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& g = groups[key];
    std::vector<double> th, ts, be, up;
    for (const ResultRow* r : g) {
      th.push_back(r->t_halo_total_s);
      ts.push_back(r->t_step_total_s);
      be.push_back(r->B_eff_MBps);
      up.push_back(r->updates_per_core);
    }
    SummaryRow s;
    s.strategy = g.front()->strategy;
    s.proc_dims = g.front()->proc_dims;
    s.local_dims = g.front()->local_dims;
    s.m = g.front()->m;
    s.repetitions = static_cast<int>(g.size());
    s.t_halo = metrics::summarize(th);
    s.t_step = metrics::summarize(ts);
    s.B_eff = metrics::summarize(be);
    s.updates = metrics::summarize(up);
    out.push_back(s);
  }
  return out;
}

std::string summary_header() {
  return "strategy,Px,Py,Pz,Lx,Ly,Lz,m,reps,t_halo_mean_s,t_halo_sigma_s,t_step_mean_s,t_step_sigma_s,"
         "B_eff_mean_MBps,B_eff_sigma_MBps,updates_mean,updates_sigma";
}

std::string to_csv(const SummaryRow& s) {
  std::string out = s.strategy;
  for (int a = 0; a < 3; ++a) out += "," + std::to_string(s.proc_dims(a));
  for (int a = 0; a < 3; ++a) out += "," + std::to_string(s.local_dims(a));
  out += "," + std::to_string(s.m) + "," + std::to_string(s.repetitions);
  for (const auto* v : {&s.t_halo, &s.t_step, &s.B_eff, &s.updates}) out += "," + fmt(v->mean) + "," + fmt(v->stddev);
  return out;
}

std::vector<fs::path> write_outputs(const RunConfig& cfg, const std::vector<ResultRow>& rows, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> written;

  std::string raw = csv_header() + "\n";
  for (const auto& r : rows) raw += to_csv(r) + "\n";
  write_file(dir / kRawFile, raw, written);

  const auto summary = summarize_rows(rows);
  std::string sum = summary_header() + "\n";
  for (const auto& s : summary) sum += to_csv(s) + "\n";
  write_file(dir / kSummaryFile, sum, written);

  const bool whole_step = cfg.overlap_enabled;
  std::string meta;
  for (const auto& [k, v] : config_entries(cfg)) meta += k + " = " + v + "\n";
  meta += "timing.scope = " + std::string(whole_step ? "whole_step" : "halo_calls") + "\n";
  meta += "host.hardware_threads = " + std::to_string(std::thread::hardware_concurrency()) + "\n";
  meta += "host.oversubscribed = " + std::string(oversubscribed(cfg) ? "true" : "false") + "\n";
  write_file(dir / kMetadataFile, meta, written);

  // Plot data, one file per variant and figure family.
  std::map<std::string, std::vector<const SummaryRow*>> by_variant;
  for (const auto& s : summary) by_variant[s.strategy].push_back(&s);

  std::map<std::string, metrics::Series> runtimes;
  for (const auto& [variant, list] : by_variant) {
    std::string beff = "# message_MB B_eff_MBps sigma\n";
    std::string upd = "# interior_sites updates_per_s sigma\n";
    for (const SummaryRow* s : list) {
      const double msg_mb = static_cast<double>(halo_site_count(s->local_dims)) * 8.0 * s->m / 1.0e6;
      beff += fmt(msg_mb) + " " + fmt(s->B_eff.mean) + " " + fmt(s->B_eff.stddev) + "\n";
      upd += std::to_string(s->local_dims.prod()) + " " + fmt(s->updates.mean) + " " + fmt(s->updates.stddev) + "\n";
    }
    write_file(dir / ("beff_" + variant + ".dat"), beff, written);
    write_file(dir / ("updates_" + variant + ".dat"), upd, written);

    metrics::Series t;
    bool unique = true;
    for (const SummaryRow* s : list) {
      unique = unique && !t.contains(s->contexts());
      t[s->contexts()] = whole_step ? s->t_step.mean : s->t_halo.mean;
    }
    if (unique && t.size() > 1) runtimes[variant] = t;
  }

  if (!runtimes.empty()) {
    const auto own = metrics::speedup(runtimes, metrics::SpeedupBase::PerVersion);
    std::map<std::string, metrics::Series> common;
    if (runtimes.contains("blocking")) common = metrics::speedup(runtimes, metrics::SpeedupBase::CommonT1, "blocking");
    for (const auto& [variant, t] : runtimes) {
      std::string rt = "# contexts runtime_s\n", sp = "# contexts speedup\n", ef = "# contexts efficiency\n";
      const auto eff = metrics::efficiency(own.at(variant), t.begin()->first);
      for (const auto& [p, v] : t) rt += std::to_string(p) + " " + fmt(v) + "\n";
      for (const auto& [p, v] : own.at(variant)) sp += std::to_string(p) + " " + fmt(v) + "\n";
      for (const auto& [p, v] : eff) ef += std::to_string(p) + " " + fmt(v) + "\n";
      write_file(dir / ("runtime_" + variant + ".dat"), rt, written);
      write_file(dir / ("speedup_" + variant + ".dat"), sp, written);
      write_file(dir / ("efficiency_" + variant + ".dat"), ef, written);
      if (!common.empty()) {
        std::string sc = "# contexts speedup_vs_blocking_T1\n";
        for (const auto& [p, v] : common.at(variant)) sc += std::to_string(p) + " " + fmt(v) + "\n";
        write_file(dir / ("speedup_common_" + variant + ".dat"), sc, written);
      }
      if (variant != "blocking" && runtimes.contains("blocking")) {
        const auto& base = runtimes.at("blocking");
        std::string diff = "# contexts runtime_minus_blocking_s relative_to_blocking\n";
        for (const auto& [p, v] : t) {
          if (!base.contains(p)) continue;
          const double d = v - base.at(p);
          diff += std::to_string(p) + " " + fmt(d) + " " + fmt(d / base.at(p)) + "\n";
        }
        write_file(dir / ("runtime_diff_" + variant + ".dat"), diff, written);
      }
    }
  }
  return written;
}

VerifyReport verify_outputs(const fs::path& dir) {
  VerifyReport report;
  int iterations = 0;
  for (const auto& line : lines_of(read_file(dir / kMetadataFile))) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    if (key == "bench.iterations") iterations = std::atoi(line.c_str() + eq + 1);
  }
  if (iterations < 1) {
    report.problems.push_back("metadata has no valid bench.iterations");
    return report;
  }

  const auto raw_lines = lines_of(read_file(dir / kRawFile));
  if (raw_lines.empty() || raw_lines.front() != csv_header()) {
    report.problems.push_back(std::string(kRawFile) + ": header does not match the expected columns");
    return report;
  }
  std::vector<ResultRow> rows;
  for (std::size_t n = 1; n < raw_lines.size(); ++n) {
    ResultRow r;
    try {
      r = parse_csv_row(raw_lines[n]);
    } catch (const ConfigError& e) {
      report.problems.push_back(std::string(kRawFile) + " line " + std::to_string(n + 1) + ": " + e.what());
      continue;
    }
    ResultRow expect = r;
    derive_columns(expect, iterations);
    if (expect.B_eff_MBps != r.B_eff_MBps || expect.updates_per_core != r.updates_per_core) {
      report.problems.push_back(std::string(kRawFile) + " line " + std::to_string(n + 1) +
                                ": derived columns do not match (B_eff " + fmt(r.B_eff_MBps) + " vs " +
                                fmt(expect.B_eff_MBps) + ", updates " + fmt(r.updates_per_core) + " vs " +
                                fmt(expect.updates_per_core) + ")");
    }
    rows.push_back(r);
    ++report.rows_checked;
  }

  const auto sum_lines = lines_of(read_file(dir / kSummaryFile));
  const auto expected = summarize_rows(rows);
  if (sum_lines.empty() || sum_lines.front() != summary_header()) {
    report.problems.push_back(std::string(kSummaryFile) + ": header does not match the expected columns");
    return report;
  }
  if (sum_lines.size() - 1 != expected.size()) {
    report.problems.push_back(std::string(kSummaryFile) + ": " + std::to_string(sum_lines.size() - 1) +
                              " rows, expected " + std::to_string(expected.size()));
    return report;
  }
  for (std::size_t n = 0; n < expected.size(); ++n) {
    if (sum_lines[n + 1] != to_csv(expected[n])) {
      report.problems.push_back(std::string(kSummaryFile) + " line " + std::to_string(n + 2) +
                                ": does not match the summary recomputed from raw rows");
    }
    ++report.summaries_checked;
  }
  return report;
}

}  // namespace lbhalo
