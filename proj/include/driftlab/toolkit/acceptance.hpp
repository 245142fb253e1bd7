#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "driftlab/toolkit/json_io.hpp"

namespace driftlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::map<std::string, double> metrics;
  std::string summary;
  /// Wall-clock time and its budget; printed, never written to result files.
  double seconds = 0.0;
  double budget_seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20241019;
  /// Worker counts for the determinism check; the first is used for the
  /// reported results.
  std::vector<std::size_t> thread_counts{1, 4};
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  [[nodiscard]] bool all_passed() const;
};

/// Criteria 1 to 9, each at its fixed tolerance.
std::vector<CriterionResult> run_statistical_criteria(std::uint64_t seed);

/// Criteria 1 to 9 once per worker count, then criterion 10: the serialized
/// results must be byte-identical across runs. `on_result` sees each
/// criterion of the first run as it finishes.
AcceptanceReport run_acceptance(const AcceptanceOptions& options,
                                const std::function<void(const CriterionResult&)>& on_result = {});

/// Deterministic part of the results (no timings).
Json acceptance_to_json(const std::vector<CriterionResult>& criteria);

/// One line per criterion: `[PASS] 3 name: summary (0.4 s)`.
std::string format_criterion(const CriterionResult& r);

}  // namespace driftlab
