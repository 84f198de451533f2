#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "pedcross/errors.hpp"

namespace pedcross::track {

/// Rows are tracks, columns are detections. Infeasible (gated-out) pairs hold
/// the infinity sentinel and are never matched.
class CostMatrix {
 public:
  static constexpr double kInfeasible = std::numeric_limits<double>::infinity();

  CostMatrix() = default;
  CostMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), entries_(static_cast<std::size_t>(rows) * cols, kInfeasible) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double at(int r, int c) const { return entries_[static_cast<std::size_t>(r) * cols_ + c]; }
  void set(int r, int c, double cost) {
    if (cost < 0.0 || std::isnan(cost)) throw InputError("CostMatrix: cost must be >= 0");
    entries_[static_cast<std::size_t>(r) * cols_ + c] = cost;
  }
  bool feasible(int r, int c) const { return std::isfinite(at(r, c)); }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> entries_;
};

struct Assignment {
  std::vector<std::pair<int, int>> matches;  // (row, col), sorted by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;
};

/// Minimum-cost bipartite assignment. Among matchings restricted to feasible
/// pairs, maximizes cardinality first, then minimizes total cost.
Assignment hungarian_solve(const CostMatrix& costs);

}  // namespace pedcross::track
