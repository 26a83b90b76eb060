#pragma once

// Minimum-cost bipartite assignment (Kuhn-Munkres with potentials, O(n^3)).
// Forbidden pairs are marked with kInfeasibleCost; the solver returns the
// cheapest matching among those with the fewest forbidden pairs, then strips
// the forbidden ones, so rows/columns that can only match forbidden partners
// come back unmatched.

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "stksvd/errors.hpp"
#include "stksvd/sparse_coding.hpp"

namespace stksvd {

inline constexpr double kInfeasibleCost = std::numeric_limits<double>::infinity();

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, column)
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;
};

namespace detail {

// Square solver; returns col index assigned to each row.
inline std::vector<int> solve_square_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1,
                             std::numeric_limits<double>::infinity());
    std::vector<bool> used(static_cast<size_t>(n) + 1, false);
    do {
      used[static_cast<size_t>(j0)] = true;
      const int i0 = p[static_cast<size_t>(j0)];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<size_t>(j)] != 0) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)]) - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace detail

inline Assignment hungarian(const Matrix& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  Assignment out;
  if (rows == 0 || cols == 0) {
    for (int r = 0; r < rows; ++r) out.unmatched_rows.push_back(r);
    for (int c = 0; c < cols; ++c) out.unmatched_cols.push_back(c);
    return out;
  }

  // Orient so rows <= cols, then pad with zero-cost dummy rows: every real
  // row then receives a real column, and forbidden entries carry a cost big
  // enough that the solver uses as few of them as possible.
  const bool transposed = rows > cols;
  const Matrix oriented = transposed ? Matrix(cost.transpose()) : cost;
  const int r = static_cast<int>(oriented.rows());
  const int c = static_cast<int>(oriented.cols());

  double max_abs = 0.0;
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      const double v = oriented(i, j);
      if (v == kInfeasibleCost) continue;
      if (!std::isfinite(v)) throw Error("hungarian: cost matrix has non-finite entries");
      max_abs = std::max(max_abs, std::abs(v));
    }
  }
  const double forbidden = (max_abs + 1.0) * (c + 1);

  Matrix padded = Matrix::Zero(c, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      padded(i, j) = (oriented(i, j) == kInfeasibleCost) ? forbidden : oriented(i, j);
    }
  }

  const std::vector<int> row_to_col = detail::solve_square_assignment(padded);

  std::vector<bool> row_matched(static_cast<size_t>(rows), false);
  std::vector<bool> col_matched(static_cast<size_t>(cols), false);
  for (int i = 0; i < r; ++i) {
    const int j = row_to_col[static_cast<size_t>(i)];
    if (j < 0) continue;
    const int row = transposed ? j : i;
    const int col = transposed ? i : j;
    if (cost(row, col) == kInfeasibleCost) continue;
    out.pairs.emplace_back(row, col);
    out.total_cost += cost(row, col);
    row_matched[static_cast<size_t>(row)] = true;
    col_matched[static_cast<size_t>(col)] = true;
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (int i = 0; i < rows; ++i) {
    if (!row_matched[static_cast<size_t>(i)]) out.unmatched_rows.push_back(i);
  }
  for (int j = 0; j < cols; ++j) {
    if (!col_matched[static_cast<size_t>(j)]) out.unmatched_cols.push_back(j);
  }
  return out;
}

}  // namespace stksvd
