// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Minimum-cost one-to-one assignment on square cost matrices.
//
// The exact solver is the shortest-augmenting-path form of the Hungarian
// method, O(n^3). Among all optimal permutations it returns the
// lexicographically smallest one, so results are reproducible bit for bit.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <tuple>
#include <vector>

#include "sstr/error.hpp"

namespace sstr {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw Error(ErrorCode::DimensionMismatch, "matrix data size");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transposed() const {
    Matrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Matching {
  /// assignment[i] = column matched to row i (0-based).
  std::vector<std::size_t> assignment;
  /// Sum of the matched entries.
  double total_cost = 0.0;
};

namespace detail {

inline void check_assignment_input(const Matrix& cost) {
  if (cost.rows() != cost.cols())
    throw Error(ErrorCode::NonSquare,
                std::to_string(cost.rows()) + "x" + std::to_string(cost.cols()));
  for (double c : cost.data())
    if (!std::isfinite(c))
      throw Error(ErrorCode::NonFinite, "cost matrix entry");
}

inline double sum_matched(const Matrix& cost,
                          const std::vector<std::size_t>& assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    total += cost(i, assignment[i]);
  return total;
}

// Rewrites an optimal assignment into the lexicographically smallest optimal
// one. Optimal assignments are exactly the perfect matchings on edges of zero
// reduced cost; rows are fixed in order, each taking the smallest tight column
// that still admits a perfect matching among the remaining rows. Feasibility
// of moving row i onto column j (owned by row r) is an alternating path from
// r back to i's current column through unfixed rows.
inline void lexicographic_normalize(const Matrix& cost,
                                    const std::vector<double>& row_pot,
                                    const std::vector<double>& col_pot,
                                    std::vector<std::size_t>& assignment,
                                    double tol) {
  const std::size_t n = assignment.size();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) owner[assignment[i]] = i;

  auto tight = [&](std::size_t i, std::size_t j) {
    return cost(i, j) - row_pot[i] - col_pot[j] <= tol;
  };

  std::vector<std::size_t> next_col(n);
  std::vector<char> reach(n);
  std::vector<std::size_t> queue;
  queue.reserve(n);

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t home = assignment[i];
    bool any = false;
    for (std::size_t j = 0; j < home && !any; ++j)
      any = owner[j] > i && tight(i, j);
    if (!any) continue;

    // Reverse search: which unfixed rows can hand their column over along a
    // chain that ends by taking `home`?
    std::fill(reach.begin(), reach.end(), 0);
    queue.clear();
    for (std::size_t x = i + 1; x < n; ++x) {
      if (tight(x, home)) {
        reach[x] = 1;
        next_col[x] = home;
        queue.push_back(x);
      }
    }
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t col = assignment[queue[q]];
      for (std::size_t x = i + 1; x < n; ++x) {
        if (!reach[x] && tight(x, col)) {
          reach[x] = 1;
          next_col[x] = col;
          queue.push_back(x);
        }
      }
    }

    std::size_t target = kNone;
    for (std::size_t j = 0; j < home; ++j) {
      if (owner[j] > i && reach[owner[j]] && tight(i, j)) {
        target = j;
        break;
      }
    }
    if (target == kNone) continue;

    std::vector<std::pair<std::size_t, std::size_t>> moves;
    moves.emplace_back(i, target);
    for (std::size_t r = owner[target];;) {
      const std::size_t c = next_col[r];
      moves.emplace_back(r, c);
      if (c == home) break;
      r = owner[c];
    }
    for (auto [row, col] : moves) {
      assignment[row] = col;
      owner[col] = row;
    }
  }
}

}  // namespace detail

/// Exact minimum-cost perfect matching. Ties resolve to the
/// lexicographically smallest assignment vector.
inline Matching min_cost_matching(const Matrix& cost) {
  detail::check_assignment_input(cost);
  const std::size_t n = cost.rows();
  Matching result;
  if (n == 0) return result;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; index 0 is the virtual source column/row.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  result.assignment.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) result.assignment[p[j] - 1] = j - 1;

  double scale = 1.0;
  for (double c : cost.data()) scale = std::max(scale, std::abs(c));
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() * scale *
                     static_cast<double>(n);
  std::vector<double> row_pot(u.begin() + 1, u.end());
  std::vector<double> col_pot(v.begin() + 1, v.end());
  detail::lexicographic_normalize(cost, row_pot, col_pot, result.assignment,
                                  tol);
  result.total_cost = detail::sum_matched(cost, result.assignment);
  return result;
}

/// Approximate matching: repeatedly takes the cheapest remaining edge
/// (ties by row, then column). Upper-bounds the exact optimum.
inline Matching greedy_matching(const Matrix& cost) {
  detail::check_assignment_input(cost);
  const std::size_t n = cost.rows();
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  edges.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) edges.emplace_back(cost(i, j), i, j);
  std::sort(edges.begin(), edges.end());

  Matching result;
  result.assignment.assign(n, 0);
  std::vector<char> row_done(n, 0), col_done(n, 0);
  std::size_t placed = 0;
  for (const auto& [c, i, j] : edges) {
    if (row_done[i] || col_done[j]) continue;
    row_done[i] = col_done[j] = 1;
    result.assignment[i] = j;
    if (++placed == n) break;
  }
  result.total_cost = detail::sum_matched(cost, result.assignment);
  return result;
}

}  // namespace sstr
