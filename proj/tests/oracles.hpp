// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Test-only reference computations. Each one recomputes a quantity from first
// principles along a different path than the library (brute force, long
// double, exhaustive enumeration) and must not call into the code it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "sstr/trace_model.hpp"

namespace sstr::oracle {

/// Shannon entropy in nats of an unnormalized nonnegative vector, in long
/// double as sum p * ln(S / w), with ln(S / w) = log1p(rest / w) where rest
/// is the mass outside w (accurate when w dominates).
inline double entropy(const std::vector<double>& w) {
  long double s = 0.0L;
  for (double x : w) s += static_cast<long double>(x);
  long double h = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    long double rest = 0.0L;
    for (std::size_t k = 0; k < w.size(); ++k)
      if (k != i) rest += static_cast<long double>(w[k]);
    const long double x = w[i];
    h += (x / s) * std::log1p(rest / x);
  }
  return static_cast<double>(h);
}

/// Minimum of sum_i C[i][p(i)] over all permutations p.
inline double brute_force_assignment(const std::vector<std::vector<double>>& c) {
  std::vector<std::size_t> perm(c.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += c[i][perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// One entry of the motion-aware cost, scalar and unvectorized.
inline double motion_cost(const std::vector<double>& a, double ax, double ay,
                          const std::vector<double>& b, double bx, double by) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += static_cast<long double>(a[k]) * b[k];
    na += static_cast<long double>(a[k]) * a[k];
    nb += static_cast<long double>(b[k]) * b[k];
  }
  const long double cosine = dot / (std::sqrt(na) * std::sqrt(nb));
  const long double disp = std::sqrt((bx - ax) * (bx - ax) + (by - ay) * (by - ay));
  return static_cast<double>((1.0L - cosine) + disp);
}

/// Segments from a left-to-right scan: returns 1-based (start, end) pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> scan_segments(
    const std::vector<double>& d, double gamma) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t frames = d.size() + 1;
  std::size_t start = 1;
  for (std::size_t t = 2; t <= frames; ++t) {
    if (d[t - 2] > gamma) {
      out.emplace_back(start, t - 1);
      start = t;
    }
  }
  out.emplace_back(start, frames);
  return out;
}

/// Earliest right end of a run of w consecutive ratios below alpha, found by
/// counting run lengths over the plain ratio vector.
inline std::optional<std::size_t> first_window(const std::vector<double>& ratios,
                                               double alpha, std::size_t w) {
  std::size_t run = 0;
  for (std::size_t j = 0; j < ratios.size(); ++j) {
    run = ratios[j] < alpha ? run + 1 : 0;
    if (run == w) return j + 1;
  }
  return std::nullopt;
}

struct TacOracle {
  double s_f, s_c;
};

/// Collapse scores recomputed from raw records without the 1/(M J) averaging
/// factor, which normalization cancels.
inline TacOracle tac(const std::vector<StepRecord>& steps, std::size_t prefix,
                     const std::vector<std::pair<std::size_t, std::size_t>>& segs) {
  const std::size_t T = steps.front().frame_attention.size();
  std::vector<double> a(T, 0.0);
  for (std::size_t j = 0; j < prefix; ++j)
    for (std::size_t t = 0; t < T; ++t) a[t] += steps[j].frame_attention[t];
  std::vector<double> m;
  for (auto [s, e] : segs) {
    double x = 0.0;
    for (std::size_t t = s; t <= e; ++t) x += a[t - 1];
    m.push_back(x);
  }
  return {entropy(a), entropy(m)};
}

}  // namespace sstr::oracle
