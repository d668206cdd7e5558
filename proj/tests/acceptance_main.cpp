// Acceptance suite: runs every built-in scenario and prints one pass/fail
// line per criterion. Exit code = number of failing criteria.

#include <cstdio>

#include "ergolab/scenarios.hpp"

int main() {
  int failures = 0;
  for (const auto& [id, summary] : ergolab::scenarios::scenario_table()) {
    ergolab::scenarios::ScenarioResult r = ergolab::scenarios::run_scenario(id);
    std::printf("[%s] %-22s %s (%.1f ms)\n", r.pass ? "PASS" : "FAIL", r.id.c_str(),
                summary.c_str(), r.wall_ms);
    for (const auto& c : r.checks) {
      std::printf("    %s %-58s %s [%s]\n", c.pass ? "ok  " : "FAIL", c.label.c_str(),
                  c.detail.c_str(), c.source.c_str());
    }
    if (!r.pass) ++failures;
  }
  if (failures == 0)
    std::printf("all criteria passed\n");
  else
    std::printf("%d criteria FAILED\n", failures);
  return failures;
}
