// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "sstr/assignment.hpp"
#include "sstr/synth.hpp"

using namespace sstr;
using Catch::Matchers::WithinAbs;

namespace {

Matrix random_matrix(synth::Rng& rng, std::size_t n, double lo = 0.0, double hi = 3.4) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

std::vector<std::vector<double>> rows(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

bool is_permutation(const std::vector<std::size_t>& p) {
  std::vector<std::size_t> s = p;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] != i) return false;
  return true;
}

// Lexicographically smallest permutation among those achieving the optimum,
// by enumeration (permutations are generated in lexicographic order).
std::vector<std::size_t> brute_lexmin(const std::vector<std::vector<double>>& c,
                                      double best, double tol) {
  std::vector<std::size_t> perm(c.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += c[i][perm[i]];
    if (s <= best + tol) return perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {};
}

}  // namespace

TEST_CASE("zero matrix returns identity at zero cost", "[assignment]") {
  const auto m = min_cost_matching(Matrix(3, 3, 0.0));
  CHECK(m.total_cost == 0.0);
  CHECK(m.assignment == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("2x2 swap example picks the crossing permutation", "[assignment]") {
  // Brute force: identity costs 1 + 1 = 2, crossing costs 0.5 + 0.5 = 1.
  const auto m = min_cost_matching(Matrix(2, 2, {1.0, 0.5, 0.5, 1.0}));
  CHECK(m.assignment == std::vector<std::size_t>{1, 0});
  CHECK(m.total_cost == 1.0);
}

TEST_CASE("input errors", "[assignment]") {
  CHECK_THROWS_MATCHES(min_cost_matching(Matrix(2, 3)), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == ErrorCode::NonSquare; }));
  Matrix bad(2, 2, 1.0);
  bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_MATCHES(min_cost_matching(bad), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == ErrorCode::NonFinite; }));
  CHECK(min_cost_matching(Matrix(0, 0)).assignment.empty());
}

TEST_CASE("exact solver equals exhaustive enumeration for M <= 6", "[assignment][oracle]") {
  synth::Rng rng(42);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int rep = 0; rep < 60; ++rep) {
      const Matrix c = random_matrix(rng, n);
      const auto got = min_cost_matching(c);
      REQUIRE(is_permutation(got.assignment));
      CHECK_THAT(got.total_cost, WithinAbs(oracle::brute_force_assignment(rows(c)), 1e-9));
    }
  }
}

TEST_CASE("ties resolve to the lexicographically smallest optimum", "[assignment][oracle]") {
  // Small-integer costs produce many tied optima.
  synth::Rng rng(7);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = rng.index(2, 6);
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) c(i, j) = static_cast<double>(rng.index(0, 2));
    const auto got = min_cost_matching(c);
    const double best = oracle::brute_force_assignment(rows(c));
    CHECK(got.total_cost == best);
    CHECK(got.assignment == brute_lexmin(rows(c), best, 1e-12));
  }
}

TEST_CASE("transpose symmetry and identity bound", "[assignment]") {
  synth::Rng rng(99);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = rng.index(1, 30);
    const Matrix c = random_matrix(rng, n);
    const auto a = min_cost_matching(c);
    const auto b = min_cost_matching(c.transposed());
    CHECK_THAT(a.total_cost, WithinAbs(b.total_cost, 1e-9));
    double identity = 0.0;
    for (std::size_t i = 0; i < n; ++i) identity += c(i, i);
    CHECK(a.total_cost <= identity + 1e-12);
  }
}

TEST_CASE("greedy fallback is a valid upper bound", "[assignment]") {
  synth::Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = rng.index(1, 6);
    const Matrix c = random_matrix(rng, n);
    const auto g = greedy_matching(c);
    REQUIRE(is_permutation(g.assignment));
    CHECK(g.total_cost >= min_cost_matching(c).total_cost - 1e-12);
  }
}
