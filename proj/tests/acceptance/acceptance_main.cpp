// Runs every acceptance criterion (full suite) and prints one line each.
#include <cstdio>
#include <cstring>
#include <string>

#include <systola/validation.hpp>

int main(int argc, char** argv) {
  systola::ValidationOptions opt;
  opt.level = systola::SuiteLevel::Full;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) opt.level = systola::SuiteLevel::Quick;
  opt.on_result = [](const systola::SuiteEntry& e, double seconds) {
    std::printf("criterion %2d %-22s %s  (%.1f s)  %s\n", e.id, e.name.c_str(), e.pass ? "PASS" : "FAIL", seconds,
                e.detail.c_str());
    std::fflush(stdout);
  };
  const systola::ValidationReport rep = systola::validate_suite(opt);
  int failed = 0;
  for (const auto& e : rep.entries) failed += e.pass ? 0 : 1;
  std::printf("%zu criteria, %d failed\n", rep.entries.size(), failed);
  return failed == 0 && rep.entries.size() == (opt.level == systola::SuiteLevel::Full ? 14u : 13u) ? 0 : 1;
}
