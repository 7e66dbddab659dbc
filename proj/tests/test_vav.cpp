// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <limits>
#include <optional>
#include <vector>

#include "oracles.hpp"
#include "sstr/synth.hpp"
#include "sstr/vav.hpp"

using namespace sstr;

namespace {

// Visual mass 1 split over two frames; text attention 1 / ratio. Ratios are
// powers of two or simple decimals chosen away from alpha, so f32 rounding
// cannot move them across the threshold.
std::vector<StepRecord> records_for(const std::vector<double>& ratios) {
  std::vector<StepRecord> out;
  for (double r : ratios)
    out.push_back({0, {0.5f, 0.5f}, static_cast<float>(1.0 / r)});
  return out;
}

RunConfig cfg(double alpha, std::size_t w, std::size_t cap = 100000) {
  RunConfig c;
  c.alpha = alpha;
  c.window = w;
  c.max_prefix_tokens = cap;
  return c;
}

// Streaming fold; absent unless triggered.
std::optional<std::size_t> fold(const std::vector<StepRecord>& recs, const RunConfig& c) {
  VavState s;
  for (const auto& r : recs) {
    auto [next, v] = vav_step(s, r, c);
    s = next;
    if (v.kind == VavVerdictKind::Triggered) return v.step;
  }
  return std::nullopt;
}

std::size_t as_index(std::optional<std::size_t> j) {
  return j ? *j : std::numeric_limits<std::size_t>::max();
}

}  // namespace

TEST_CASE("vav_step examples", "[vav]") {
  SECTION("run of steps 2..4 triggers at 4") {
    const auto recs = records_for({1.5, 1.1, 1.0, 1.0, 1.0});
    CHECK(fold(recs, cfg(1.2, 3)) == std::optional<std::size_t>(4));
    CHECK(oracle::first_window({1.5, 1.1, 1.0, 1.0, 1.0}, 1.2, 3) ==
          std::optional<std::size_t>(4));
  }
  SECTION("never below threshold caps") {
    const auto recs = records_for(std::vector<double>(20, 2.0));
    VavState s;
    VavVerdict last;
    std::size_t calls = 0;
    for (const auto& r : recs) {
      auto [next, v] = vav_step(s, r, cfg(1.2, 3, 8));
      s = next;
      ++calls;
      last = v;
      if (v.kind != VavVerdictKind::NotYet) break;
    }
    CHECK(calls == 8);
    CHECK(last == VavVerdict{VavVerdictKind::Capped, 8});
  }
  SECTION("window of one") {
    const auto recs = records_for({1.0});
    CHECK(fold(recs, cfg(1.2, 1)) == std::optional<std::size_t>(1));
  }
  SECTION("trigger on the cap step wins") {
    const auto recs = records_for({2.0, 1.0, 1.0});
    VavState s;
    VavVerdict v;
    for (const auto& r : recs) std::tie(s, v) = vav_step(s, r, cfg(1.2, 2, 3));
    CHECK(v == VavVerdict{VavVerdictKind::Triggered, 3});
  }
}

TEST_CASE("vav_step state machine", "[vav]") {
  const auto recs = records_for({1.0, 1.0, 2.0, 1.0});
  VavState s;
  std::tie(s, std::ignore) = vav_step(s, recs[0], cfg(1.2, 3));
  std::tie(s, std::ignore) = vav_step(s, recs[1], cfg(1.2, 3));
  CHECK(s.run_length == 2);
  std::tie(s, std::ignore) = vav_step(s, recs[2], cfg(1.2, 3));
  CHECK(s.run_length == 0);
  CHECK(s.steps_seen == 3);

  VavState fired;
  std::tie(fired, std::ignore) = vav_step(VavState{}, recs[0], cfg(1.2, 1));
  REQUIRE(fired.triggered_at == std::optional<std::size_t>(1));
  try {
    vav_step(fired, recs[1], cfg(1.2, 1));
    FAIL("expected AlreadyTriggered");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AlreadyTriggered);
  }
}

TEST_CASE("zero text attention counts as an infinite ratio", "[vav]") {
  std::vector<StepRecord> recs = records_for({1.0, 1.0, 1.0});
  recs[0].text_attention = 0.0f;
  CHECK(attention_ratio(recs[0]) == std::numeric_limits<double>::infinity());
  CHECK(vav_offline(recs, cfg(1.2, 3)) == std::nullopt);
  CHECK(vav_offline(recs, cfg(1.2, 2)) == std::optional<std::size_t>(3));
}

TEST_CASE("vav_offline examples", "[vav]") {
  CHECK(vav_offline(std::vector<StepRecord>{}, cfg(1.2, 10)) == std::nullopt);
  CHECK(vav_offline(records_for(std::vector<double>(10, 1.0)), cfg(1.2, 10)) ==
        std::optional<std::size_t>(10));
  CHECK(vav_offline(records_for(std::vector<double>(9, 1.0)), cfg(1.2, 10)) == std::nullopt);
}

TEST_CASE("streaming fold equals offline scan; monotone in alpha and w",
          "[vav][property]") {
  synth::Rng rng(123);
  const double levels[] = {0.5, 0.75, 1.0, 1.1, 1.25, 1.5, 2.0, 4.0};
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t L = rng.index(1, 200);
    std::vector<double> ratios(L);
    // Long low-ratio stretches make triggers common.
    const double p_low = rng.uniform(0.3, 0.95);
    for (auto& r : ratios) r = rng.uniform() < p_low ? levels[rng.index(0, 3)] : levels[rng.index(4, 7)];
    const auto recs = records_for(ratios);
    const std::size_t w = rng.index(1, 12);
    const double alpha = 1.2;
    const auto off = vav_offline(recs, cfg(alpha, w));
    CHECK(fold(recs, cfg(alpha, w)) == off);
    CHECK(oracle::first_window(ratios, alpha, w) == off);

    CHECK(as_index(vav_offline(recs, cfg(1.05, w))) >= as_index(off));
    CHECK(as_index(vav_offline(recs, cfg(1.6, w))) <= as_index(off));
    CHECK(as_index(vav_offline(recs, cfg(alpha, w + 1))) >= as_index(off));
    if (w > 1) CHECK(as_index(vav_offline(recs, cfg(alpha, w - 1))) <= as_index(off));

    // A high-ratio step right before a trigger delays it by at least w.
    if (off && *off >= 1) {
      auto delayed = ratios;
      delayed.insert(delayed.begin() + static_cast<std::ptrdiff_t>(*off - 1), 4.0);
      const auto after = vav_offline(records_for(delayed), cfg(alpha, w));
      CHECK(as_index(after) >= *off + w);
    }
  }
}
