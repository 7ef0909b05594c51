#include "dimperf/assignment.hpp"

#include <limits>

#include "dimperf/error.hpp"

namespace dimperf {

Assignment solve_assignment(const std::vector<double>& cost, std::size_t rows, std::size_t cols) {
  if (rows > cols) throw InvalidArgument("assignment needs rows <= cols");
  if (cost.size() != rows * cols) throw InvalidArgument("cost matrix size mismatch");
  Assignment out;
  if (rows == 0) return out;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is a virtual column holding the row being inserted.
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> owner(cols + 1, 0), way(cols + 1, 0);

  for (std::size_t i = 1; i <= rows; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(cols + 1, kInf);
    std::vector<bool> used(cols + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.row_to_col.assign(rows, 0);
  for (std::size_t j = 1; j <= cols; ++j)
    if (owner[j] != 0) out.row_to_col[owner[j] - 1] = j - 1;
  for (std::size_t i = 0; i < rows; ++i) out.cost += cost[i * cols + out.row_to_col[i]];
  return out;
}

}  // namespace dimperf
