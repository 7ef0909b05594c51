#pragma once

#include <cstddef>
#include <vector>

namespace dimperf {

struct Assignment {
  /// row_to_col[i] is the column assigned to row i.
  std::vector<std::size_t> row_to_col;
  double cost = 0.0;
};

/// Minimum-cost assignment of every row to a distinct column (Kuhn-Munkres with
/// potentials, O(rows^2 * cols)). `cost` is row-major rows x cols with rows <= cols.
Assignment solve_assignment(const std::vector<double>& cost, std::size_t rows, std::size_t cols);

}  // namespace dimperf
