// Acceptance suite: one pass/fail line per criterion.
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "driftlab/toolkit/acceptance.hpp"
#include "driftlab/toolkit/atomic_file.hpp"

int main(int argc, char** argv) {
  CLI::App app{"driftlab acceptance suite"};
  std::string out;
  std::uint64_t seed = driftlab::AcceptanceOptions{}.seed;
  app.add_option("--out", out, "result file (JSON, no timings)");
  app.add_option("--seed", seed, "base seed");
  CLI11_PARSE(app, argc, argv);

  driftlab::AcceptanceOptions opts;
  opts.seed = seed;
  bool within_budget = true;
  const auto report = driftlab::run_acceptance(opts, [&](const driftlab::CriterionResult& r) {
    std::cout << driftlab::format_criterion(r) << std::endl;
    if (r.budget_seconds > 0.0 && r.seconds > r.budget_seconds) within_budget = false;
  });
  if (!out.empty()) {
    driftlab::write_file_atomic(out, driftlab::dump_json(driftlab::acceptance_to_json(report.criteria)));
  }
  std::size_t passed = 0;
  for (const auto& c : report.criteria) passed += c.passed ? 1 : 0;
  std::cout << passed << "/" << report.criteria.size() << " criteria passed" << std::endl;
  return report.all_passed() && within_budget ? 0 : 1;
}
