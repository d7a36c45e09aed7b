#pragma once

#include <string>
#include <vector>

namespace privloc {

struct GradCheckResult {
    std::string name;
    double max_rel_error = 0.0;
    double threshold = 0.0;

    bool ok() const { return max_rel_error < threshold; }
};

// Finite-difference verification of every tensor op, `seeds` random draws
// each. Threshold 1e-4.
std::vector<GradCheckResult> op_gradient_checks(int seeds);

// The whole multi-head forward plus BCE at toy dimensions. Threshold 1e-3.
GradCheckResult full_graph_gradient_check(int seeds);

}  // namespace privloc
