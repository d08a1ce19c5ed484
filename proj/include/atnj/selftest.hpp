#pragma once

#include <string>
#include <vector>

namespace atnj {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Runs the full invariant suite. data_dir holds the PPM fixture set,
// golden_dir the frozen reference files.
std::vector<CheckResult> run_selftest(const std::string& data_dir,
                                      const std::string& golden_dir);

}  // namespace atnj
