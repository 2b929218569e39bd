#pragma once

// The acceptance suite shared by `dynascore verify` and the test binary.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dynascore {

struct CheckResult {
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::vector<CheckResult> checks;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::uint64_t seed = 20240611;
    bool inject_reserve_fault = false;
    /// Criteria to run; empty means all.
    std::vector<int> only;
    /// Working directory for the determinism criterion.
    std::filesystem::path scratch = std::filesystem::temp_directory_path() / "dynascore-acceptance";
};

inline constexpr int kCriteriaCount = 11;

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

CriterionResult run_criterion(int id, const AcceptanceOptions& options);

}  // namespace dynascore
