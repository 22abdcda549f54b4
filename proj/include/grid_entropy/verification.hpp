#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "grid_entropy/measure.hpp"

namespace grid_entropy {

struct CriterionResult {
    int id = 0;
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
    double seconds = 0.0;
    double time_limit = 0.0;
    std::string detail;
};

using DistanceFn = std::function<double(const Measure&, const Measure&)>;

struct VerifyOptions {
    std::uint64_t seed = 1;
    /// Multiplies every statistical tolerance; exactness bounds are unaffected.
    double tolerance_scale = 1.0;
    /// Criteria to run; empty runs all twelve.
    std::set<int> only;
    /// Distance under test in the oracle and metric-law criteria.
    DistanceFn distance;
    /// Print each result as soon as it is available.
    std::function<void(const CriterionResult&)> on_result;
};

/// Runs the acceptance criteria and returns one result per criterion in id order.
std::vector<CriterionResult> run_verification(const VerifyOptions& options = {});

/// "id,name,measured,bound,pass,seconds" table with a header row.
std::string verification_table(const std::vector<CriterionResult>& results);

}  // namespace grid_entropy
