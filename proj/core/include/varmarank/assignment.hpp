#pragma once

#include "varmarank/linalg.hpp"

#include <vector>

namespace varmarank {

struct AssignmentResult {
    std::vector<int> row_to_col;
    std::vector<int> col_to_row;
    double cost = 0.0;  // sum of cost(i, row_to_col[i]) in row order
    std::vector<double> column_duals;
};

/// Exact minimum-cost perfect matching on a dense square cost matrix.
///
/// Jonker-Volgenant shortest augmenting path: column reduction, reduction
/// transfer and two augmenting-row-reduction sweeps, then a Dijkstra-style
/// augmentation for every row left free. Worst case O(n^3).
///
/// Ties are broken deterministically: the lowest column index wins in the
/// reduction phases and the first column reached in scan order ends an
/// augmenting path.
AssignmentResult solve_assignment(const Matrix& cost);

/// Same problem, started from the column duals of a nearby instance. The
/// optimum cost is unchanged; with tied optima the matching may differ from
/// the cold start.
AssignmentResult solve_assignment(const Matrix& cost, const std::vector<double>& column_duals);

}  // namespace varmarank
