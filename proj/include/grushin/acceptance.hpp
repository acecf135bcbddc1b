#pragma once

#include "grushin/io.hpp"

#include <functional>
#include <string>
#include <vector>

namespace grushin {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string summary; // measured values against their limits
    Json measured;
    double seconds = 0.0;
};

struct AcceptanceReport {
    std::vector<CriterionResult> criteria;
    double seconds = 0.0;

    bool passed() const;
};

/// Called after each criterion finishes (progress output).
using CriterionCallback = std::function<void(const CriterionResult&)>;

/// Runs the ten acceptance criteria in order. A criterion that throws is
/// recorded as failed with the error message.
AcceptanceReport run_acceptance(const CriterionCallback& onResult = {});

/// "criterion  3 PASS classical-reduction: ..." style line.
std::string summary_line(const CriterionResult& r);

/// Deterministic part (no timings) and the timing side table.
Json to_json(const AcceptanceReport& report);
Json timing_json(const AcceptanceReport& report);

} // namespace grushin
