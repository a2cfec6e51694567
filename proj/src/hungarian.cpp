#include "toothseg/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "toothseg/error.hpp"

namespace toothseg {

CostMatrix::CostMatrix(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) fail(ErrorCode::InvalidArgument, "negative cost matrix size");
  data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
}

CostMatrix::CostMatrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows < 0 || cols < 0 || data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    fail(ErrorCode::InvalidArgument, "cost matrix data length does not match rows*cols");
  }
}

namespace {

// Rows <= cols required. Returns, for every row, its assigned column.
std::vector<int> solve_wide(int n, int m, const auto& at) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);  // match[col] = row (1-based), 0 = free

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
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
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

Assignment hungarian(const CostMatrix& cost) {
  for (int r = 0; r < cost.rows(); ++r) {
    for (int c = 0; c < cost.cols(); ++c) {
      if (!std::isfinite(cost(r, c))) fail(ErrorCode::NonFiniteCost, "cost matrix entry is not finite");
    }
  }

  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;

  if (cost.rows() <= cost.cols()) {
    const auto cols = solve_wide(cost.rows(), cost.cols(), [&](int r, int c) { return cost(r, c); });
    for (int r = 0; r < cost.rows(); ++r) out.pairs.emplace_back(r, cols[r]);
  } else {
    const auto rows = solve_wide(cost.cols(), cost.rows(), [&](int r, int c) { return cost(c, r); });
    for (int c = 0; c < cost.cols(); ++c) out.pairs.emplace_back(rows[c], c);
    std::sort(out.pairs.begin(), out.pairs.end());
  }
  for (const auto& [r, c] : out.pairs) out.total_cost += cost(r, c);
  return out;
}

}  // namespace toothseg
