#pragma once

// Independent reference implementations used only by tests. These must stay
// free of the library code paths they check.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace oracles {

struct BruteAssignment {
  std::vector<std::pair<int, int>> matches;
  int cardinality = 0;
  double total_cost = 0.0;
};

/// Exhaustive assignment search: maximize matched pairs over feasible entries
/// (cost < inf), then minimize the total cost. Rows/cols <= ~8.
inline BruteAssignment brute_force_assignment(const std::vector<std::vector<double>>& cost) {
  const int rows = static_cast<int>(cost.size());
  const int cols = rows > 0 ? static_cast<int>(cost[0].size()) : 0;
  BruteAssignment best;
  best.cardinality = -1;

  std::vector<int> row_to_col(rows, -1);
  std::vector<bool> col_used(cols, false);

  const auto consider = [&]() {
    int cardinality = 0;
    double total = 0.0;
    for (int r = 0; r < rows; ++r) {
      if (row_to_col[r] < 0) continue;
      ++cardinality;
      total += cost[r][row_to_col[r]];
    }
    if (cardinality > best.cardinality ||
        (cardinality == best.cardinality && total < best.total_cost)) {
      best.cardinality = cardinality;
      best.total_cost = total;
      best.matches.clear();
      for (int r = 0; r < rows; ++r)
        if (row_to_col[r] >= 0) best.matches.emplace_back(r, row_to_col[r]);
    }
  };

  const std::function<void(int)> recurse = [&](int r) {
    if (r == rows) {
      consider();
      return;
    }
    recurse(r + 1);  // leave row r unmatched
    for (int c = 0; c < cols; ++c) {
      if (col_used[c] || !std::isfinite(cost[r][c])) continue;
      col_used[c] = true;
      row_to_col[r] = c;
      recurse(r + 1);
      row_to_col[r] = -1;
      col_used[c] = false;
    }
  };
  recurse(0);
  return best;
}

/// Chi-square CDF for 4 degrees of freedom (closed form for even dof).
inline double chi2_cdf_4dof(double x) {
  return 1.0 - std::exp(-0.5 * x) * (1.0 + 0.5 * x);
}

}  // namespace oracles
