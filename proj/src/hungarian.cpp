#include "pedcross/hungarian.hpp"

#include <algorithm>
#include <cmath>

namespace pedcross::track {

namespace {

// Kuhn-Munkres with row/column potentials and shortest augmenting paths,
// for n rows <= m columns; every row ends up assigned. O(n^2 m).
// 1-based internally; col_match[j] = row assigned to column j.
std::vector<int> solve_rows_le_cols(const std::vector<std::vector<double>>& a, int n, int m) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> col_match(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    col_match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = col_match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[i0][j] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[col_match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_match[j0] != 0);
    do {
      const int j1 = way[j0];
      col_match[j0] = col_match[j1];
      j0 = j1;
    } while (j0);
  }
  return col_match;
}

}  // namespace

Assignment hungarian_solve(const CostMatrix& costs) {
  Assignment out;
  const int rows = costs.rows();
  const int cols = costs.cols();
  if (rows == 0 || cols == 0) {
    for (int r = 0; r < rows; ++r) out.unmatched_rows.push_back(r);
    for (int c = 0; c < cols; ++c) out.unmatched_cols.push_back(c);
    return out;
  }

  // Replace the infeasibility sentinel with a finite weight that dominates any
  // sum of real costs, so the solver prefers fewer infeasible slots (maximum
  // feasible cardinality) before minimizing the real total.
  double finite_sum = 0.0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (costs.feasible(r, c)) finite_sum += costs.at(r, c);
  const double big = finite_sum + 1.0;

  const bool transposed = rows > cols;
  const int n = transposed ? cols : rows;
  const int m = transposed ? rows : cols;
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(m + 1, 0.0));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= m; ++j) {
      const int r = transposed ? j - 1 : i - 1;
      const int c = transposed ? i - 1 : j - 1;
      a[i][j] = costs.feasible(r, c) ? costs.at(r, c) : big;
    }

  const std::vector<int> col_match = solve_rows_le_cols(a, n, m);

  std::vector<char> row_matched(rows, 0), col_matched(cols, 0);
  for (int j = 1; j <= m; ++j) {
    const int i = col_match[j];
    if (i == 0) continue;
    const int r = transposed ? j - 1 : i - 1;
    const int c = transposed ? i - 1 : j - 1;
    if (!costs.feasible(r, c)) continue;  // solver fell back to an infeasible slot
    out.matches.emplace_back(r, c);
    row_matched[r] = 1;
    col_matched[c] = 1;
  }
  std::sort(out.matches.begin(), out.matches.end());
  for (const auto& [r, c] : out.matches) out.total_cost += costs.at(r, c);
  for (int r = 0; r < rows; ++r)
    if (!row_matched[r]) out.unmatched_rows.push_back(r);
  for (int c = 0; c < cols; ++c)
    if (!col_matched[c]) out.unmatched_cols.push_back(c);
  return out;
}

}  // namespace pedcross::track
