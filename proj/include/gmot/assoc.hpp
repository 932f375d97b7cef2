#pragma once

#include <vector>

#include "gmot/types.hpp"

namespace gmot {

/// Minimum-cost one-to-one assignment of min(M, N) pairs via shortest
/// augmenting paths with row-minimum initial duals. Returns the column for
/// each row, -1 for rows left out when M > N. Equal-cost solutions resolve
/// to the lowest row index, then the lowest column index.
std::vector<int> solve_assignment(const CostMatrix& cost);

/// Optimal matching on cost 1 - affinity, then every matched pair with
/// affinity below the threshold moves to the unmatched sets.
Assignment match_with_gating(const AffinityMatrix& affinity, double threshold);

}  // namespace gmot
