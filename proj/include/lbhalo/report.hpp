#pragma once

// CSV and plot-data output for benchmark runs, and the verifier that recomputes
// every derived column from the raw ones.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lbhalo/config.hpp"
#include "lbhalo/harness.hpp"
#include "lbhalo/metrics.hpp"

namespace lbhalo {

std::string csv_header();
/// Doubles are written with 17 significant digits so they parse back exactly.
std::string to_csv(const ResultRow& row);
/// Throws ConfigError on a malformed line.
ResultRow parse_csv_row(std::string_view line);

/// Mean and population sigma of one (variant, decomposition) group. Derived
/// quantities are computed per repetition before taking sigma.
struct SummaryRow {
  std::string strategy;
  Vec3i proc_dims = Vec3i::Ones();
  Vec3i local_dims = Vec3i::Ones();
  int m = 19;
  int repetitions = 0;
  metrics::Summary t_halo;
  metrics::Summary t_step;
  metrics::Summary B_eff;
  metrics::Summary updates;

  int contexts() const { return proc_dims.prod(); }
};

/// Groups rows in first-seen order.
std::vector<SummaryRow> summarize_rows(const std::vector<ResultRow>& rows);

std::string summary_header();
std::string to_csv(const SummaryRow& row);

/// Files written by write_outputs.
inline constexpr const char* kRawFile = "raw.csv";
inline constexpr const char* kSummaryFile = "summary.csv";
inline constexpr const char* kMetadataFile = "metadata.txt";

/// Writes raw.csv, summary.csv, metadata.txt and the two-column plot files
/// (*.dat) into `dir`, creating it if needed. Returns the paths written.
std::vector<std::filesystem::path> write_outputs(const RunConfig& cfg, const std::vector<ResultRow>& rows,
                                                 const std::filesystem::path& dir);

struct VerifyReport {
  std::size_t rows_checked = 0;
  std::size_t summaries_checked = 0;
  std::vector<std::string> problems;

  bool passed() const { return problems.empty(); }
};

/// Re-derives B_eff and updates per core for every raw row, and the summary
/// from the raw rows, and reports any value that is not bit-identical.
VerifyReport verify_outputs(const std::filesystem::path& dir);

}  // namespace lbhalo
