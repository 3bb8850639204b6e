// Acceptance battery: one pass/fail line per criterion, exit 0 iff all pass.

#include <cstdio>
#include <cstdlib>

#include "jumpflow/acceptance.hpp"

int main() {
  int threads = 8;
  if (const char* env = std::getenv("JUMPFLOW_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) threads = v;
  }
  std::printf("running acceptance criteria with %d threads\n", threads);
  std::fflush(stdout);

  bool all = true;
  for (const auto& r : jumpflow::acceptance::run_all(threads)) {
    std::printf("criterion %2d [%s] %s\n              %s (%.1fs)\n", r.id,
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
    std::fflush(stdout);
    all = all && r.pass;
  }
  std::printf("acceptance: %s\n", all ? "PASS" : "FAIL");
  return all ? 0 : 1;
}
