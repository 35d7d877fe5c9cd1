// Acceptance gate: runs every numbered criterion and prints one line each.
// Exit status is nonzero if any criterion fails.
#include <cstdio>
#include <cstring>

#include "equipart/acceptance.hpp"

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;

  equipart::AcceptanceRunner runner(quick);
  int failures = 0;
  runner.run({}, [&](const equipart::CriterionOutcome& r) {
    const char* verdict = r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL");
    std::printf("[%s] criterion %2d: %s (%.1fs) — %s\n", verdict, r.id,
                r.name.c_str(), r.seconds, r.details.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failures;
  });
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
