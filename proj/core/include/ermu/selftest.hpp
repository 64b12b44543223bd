#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ermu {

struct SelftestCase {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Small-size property checks over every module (n <= 400).
std::vector<SelftestCase> run_selftest(int threads);

int cli_selftest(int threads, std::ostream& out);

}  // namespace ermu
