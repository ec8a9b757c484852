#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rvp {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    nlohmann::json measured;  // values and the tolerances they were held to
    std::string summary;      // one-line human-readable measurement
    double seconds = 0.0;
};

struct VerifyOptions {
    std::vector<int> criteria;     // empty: all
    double tolerance_scale = 1.0;  // multiplies every pinned tolerance
    std::function<void(const CriterionResult&)> on_result;  // called as each criterion finishes
};

inline constexpr int kCriterionCount = 14;

std::string criterion_name(int id);

/// Runs the selected acceptance criteria in order. Criteria sharing an
/// expensive computation (the stability family) compute it once.
std::vector<CriterionResult> run_verification(const VerifyOptions& opt);

/// "[PASS] 3 compact-support ... (12.3 s)"
std::string format_result(const CriterionResult& r);

}  // namespace rvp
