// One line per acceptance criterion; exit status is nonzero if any fails.
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "odd/verify.hpp"

int main(int argc, char** argv) {
  odd::VerifyOptions options;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--service-seconds") == 0 && i + 1 < argc) {
      options.service_seconds = std::atof(argv[++i]);
    }
  }
  int failed = 0;
  odd::run_verification(options, [&](const odd::CheckResult& r) {
    failed += !r.pass;
    std::printf("[%s] %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  });
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
