#pragma once

#include <utility>
#include <vector>

namespace toothseg {

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(int rows, int cols, double fill = 0.0);
  CostMatrix(int rows, int cols, std::vector<double> values);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  double& operator()(int r, int c) noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const noexcept { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  double total_cost = 0.0;
};

/// Minimum-cost matching of cardinality min(rows, cols), O(n^2 m) shortest
/// augmenting paths with dual potentials. Throws NonFiniteCost.
Assignment hungarian(const CostMatrix& cost);

}  // namespace toothseg
