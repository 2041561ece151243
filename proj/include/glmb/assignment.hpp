#pragma once

#include <optional>
#include <vector>

#include "glmb/common.hpp"

namespace glmb {

/// One row-to-column assignment over a rectangular cost matrix
/// (rows <= cols, each column used at most once, +inf entries forbidden).
struct Assignment {
    std::vector<int> row_to_col;
    double total_cost = 0.0;

    bool operator==(const Assignment& other) const {
        return row_to_col == other.row_to_col;
    }
};

/// Minimum-cost assignment via shortest augmenting paths (Jonker-Volgenant
/// style). Returns nullopt when no finite-cost assignment exists.
std::optional<Assignment> try_solve_optimal(const Mat& costs);

/// As try_solve_optimal, but throws ConfigError on infeasibility.
Assignment solve_optimal(const Mat& costs);

/// The K lowest-cost distinct assignments in ascending cost order (fewer if
/// fewer exist). Ties broken by lexicographic row_to_col order.
std::vector<Assignment> k_best(const Mat& costs, int K);

}  // namespace glmb
