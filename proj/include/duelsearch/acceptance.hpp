#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "duelsearch/csv.hpp"

namespace duelsearch {

struct AcceptanceOptions {
  std::uint64_t seed = 20240611;
  unsigned workers = 1;
  /// Reduced sample sizes; thresholds are unchanged and time limits are not
  /// enforced.
  bool quick = false;
  /// Where criteria that emit artifacts write them; empty to skip.
  std::filesystem::path artifact_dir;
};

struct CriterionResult {
  std::string id;
  std::string title;
  bool passed = false;
  /// The checked quantity and the threshold it is compared with.
  double metric = 0.0;
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
  double time_limit = 0.0;  ///< 0: none
  /// Only checked in full-scale runs.
  bool within_time = true;

  bool ok() const { return passed && within_time; }
};

/// Identifiers in execution order.
std::vector<std::string> acceptance_criteria();

/// Runs one criterion. Throws Error for an unknown id.
CriterionResult run_criterion(const std::string& id, const AcceptanceOptions& options);

/// One pass/fail line.
std::string format_result(const CriterionResult& result);

/// Columns criterion,passed,metric,threshold,detail. `passed` ignores the
/// time limit, so the table is a pure function of the options.
CsvTable results_table(const std::vector<CriterionResult>& results);

/// Runs every criterion except the determinism check and writes
/// selftest.csv plus the artifacts to out_dir. Returns the results.
std::vector<CriterionResult> run_selftest(const AcceptanceOptions& options,
                                          const std::filesystem::path& out_dir);

}  // namespace duelsearch
