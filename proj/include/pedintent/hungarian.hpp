#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "pedintent/common.hpp"

namespace pedintent {

namespace detail {

// Shortest-augmenting-path assignment on an n_rows x n_cols cost matrix with
// n_rows <= n_cols. Potentials-based O(rows^2 * cols); every scan runs in
// ascending index order, so ties resolve to the lowest row, then the lowest
// column, and the result is deterministic.
inline std::vector<int> solve_rows_leq_cols(const std::vector<double>& cost, int n_rows,
                                            int n_cols) {
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0 holding the row currently being placed.
  std::vector<double> row_potential(n_rows + 1, 0.0);
  std::vector<double> col_potential(n_cols + 1, 0.0);
  std::vector<int> matched_row(n_cols + 1, 0);  // column -> row (1-based, 0 = free)
  std::vector<int> path(n_cols + 1, 0);

  for (int row = 1; row <= n_rows; ++row) {
    matched_row[0] = row;
    int j0 = 0;
    std::vector<double> min_reduced(n_cols + 1, inf);
    std::vector<char> visited(n_cols + 1, 0);
    do {
      visited[j0] = 1;
      int i0 = matched_row[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n_cols; ++j) {
        if (visited[j]) continue;
        double reduced =
            cost[(i0 - 1) * n_cols + (j - 1)] - row_potential[i0] - col_potential[j];
        if (reduced < min_reduced[j]) {
          min_reduced[j] = reduced;
          path[j] = j0;
        }
        if (min_reduced[j] < delta) {
          delta = min_reduced[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n_cols; ++j) {
        if (visited[j]) {
          row_potential[matched_row[j]] += delta;
          col_potential[j] -= delta;
        } else {
          min_reduced[j] -= delta;
        }
      }
      j0 = j1;
    } while (matched_row[j0] != 0);
    // Augment along the alternating path back to the virtual column.
    do {
      int j1 = path[j0];
      matched_row[j0] = matched_row[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n_rows, -1);
  for (int j = 1; j <= n_cols; ++j) {
    if (matched_row[j] != 0) row_to_col[matched_row[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace detail

// Minimum-cost assignment on a rectangular cost matrix (row-major,
// rows x cols). Returns min(rows, cols) pairs (row, col) sorted by row, each
// row and column used at most once, total cost globally minimal. An empty
// matrix yields an empty assignment.
inline std::vector<std::pair<int, int>> hungarian(const std::vector<double>& cost, int rows,
                                                  int cols) {
  if (rows < 0 || cols < 0 || cost.size() != static_cast<std::size_t>(rows) * cols) {
    throw ValidationError("hungarian: cost size does not match dimensions");
  }
  if (rows == 0 || cols == 0) return {};
  for (double c : cost) {
    if (!std::isfinite(c)) throw ValidationError("hungarian: costs must be finite");
  }

  std::vector<std::pair<int, int>> result;
  if (rows <= cols) {
    std::vector<int> row_to_col = detail::solve_rows_leq_cols(cost, rows, cols);
    result.reserve(rows);
    for (int i = 0; i < rows; ++i) result.emplace_back(i, row_to_col[i]);
  } else {
    std::vector<double> transposed(cost.size());
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) transposed[j * rows + i] = cost[i * cols + j];
    }
    std::vector<int> col_to_row = detail::solve_rows_leq_cols(transposed, cols, rows);
    result.reserve(cols);
    for (int j = 0; j < cols; ++j) result.emplace_back(col_to_row[j], j);
    std::sort(result.begin(), result.end());
  }
  return result;
}

inline double assignment_cost(const std::vector<double>& cost, int cols,
                              const std::vector<std::pair<int, int>>& assignment) {
  double total = 0.0;
  for (const auto& [i, j] : assignment) total += cost[i * cols + j];
  return total;
}

}  // namespace pedintent
