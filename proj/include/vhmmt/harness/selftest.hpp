#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "vhmmt/harness/scenario.hpp"

namespace vhmmt::harness {

struct SuiteResult {
    std::string name;
    bool ok = false;
    std::string detail;
};

/// Invariant suites over full scripted runs derived from `base`: every log
/// invariant at 0, 500 and 1000 ms, live/preview lag bounds, determinism,
/// report round trip through disk, and MMT/VH-MMT plant equality.
/// Logs go under `out`; one line per suite is printed to `print`.
std::vector<SuiteResult> run_selftest(const Scenario& base, const std::filesystem::path& out, std::ostream& print);

inline bool all_passed(const std::vector<SuiteResult>& r) {
    for (const auto& s : r) {
        if (!s.ok) {
            return false;
        }
    }
    return !r.empty();
}

} // namespace vhmmt::harness
