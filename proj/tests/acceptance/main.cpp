// Prints one PASS/FAIL line per acceptance criterion. The exit status
// reflects the primary criteria only; secondary lines are informational.

#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>

#include "criteria.hpp"

namespace {

int failures = 0;

void report(const char* tier, const char* name, const std::function<testsupport::Outcome()>& check) {
  testsupport::Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s [%s] %s: %s\n", o.pass ? "PASS" : "FAIL", tier, name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass && tier[0] == 'P') ++failures;
}

}  // namespace

int main() {
  using namespace testsupport;
  report("PRIMARY", "round-trip identity", roundtrip_identity);
  report("PRIMARY", "cfg properties", cfg_properties);
  report("PRIMARY", "joinpoint placement", placement_suite);
  report("PRIMARY", "dataflow", dataflow_checks);
  report("PRIMARY", "determinism", determinism);

  const auto t0 = std::chrono::steady_clock::now();
  report("SECONDARY", "verifier acceptance", verifier_acceptance);
  report("SECONDARY", "block traces", block_traces);
  report("SECONDARY", "iterator monitor", iterator_counts);
  report("SECONDARY", "aes inversions", aes_inversions);
  report("SECONDARY", "aes event scaling", aes_event_scaling);
  report("SECONDARY", "aes size overhead", aes_size_overhead);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report("SECONDARY", "harness time", [&] {
    return testsupport::Outcome{secs < 60.0, "end-to-end runs took " + std::to_string(secs) + " s"};
  });
  return failures == 0 ? 0 : 1;
}
