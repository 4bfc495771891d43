#pragma once

#include <string>
#include <vector>

namespace kgap {

struct SelftestResult {
  std::string module;
  std::string name;
  bool ok = false;
  std::string detail;
};

// Quick closed-form checks across all modules on small grids.
std::vector<SelftestResult> run_selftest();

}  // namespace kgap
