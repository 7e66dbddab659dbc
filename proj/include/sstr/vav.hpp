// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Visual attention vanishing detection. The vanishing point is the earliest
// step j such that the visual/text attention ratio is below alpha at every
// step of the window [j - w + 1, j].

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>

#include "sstr/error.hpp"
#include "sstr/trace_model.hpp"

namespace sstr {

/// Visual-to-text ratio of one step. Zero text attention (typical for the
/// first response token) maps to +inf, so such a step never extends a run.
inline double attention_ratio(const StepRecord& record) {
  const double vis = record.visual_attention();
  const double text = static_cast<double>(record.text_attention);
  if (text == 0.0) return std::numeric_limits<double>::infinity();
  return vis / text;
}

struct VavState {
  std::size_t run_length = 0;
  std::size_t steps_seen = 0;
  std::optional<std::size_t> triggered_at;
};

enum class VavVerdictKind { NotYet, Triggered, Capped };

struct VavVerdict {
  VavVerdictKind kind = VavVerdictKind::NotYet;
  /// j_vav for Triggered, max_prefix_tokens for Capped, 0 otherwise.
  std::size_t step = 0;

  friend bool operator==(const VavVerdict&, const VavVerdict&) = default;
};

/// Advances the detector by one record. Triggering at the cap step wins over
/// capping.
inline std::pair<VavState, VavVerdict> vav_step(VavState state,
                                                const StepRecord& record,
                                                const RunConfig& config) {
  if (state.triggered_at)
    throw Error(ErrorCode::AlreadyTriggered,
                "detector fired at step " +
                    std::to_string(*state.triggered_at));
  state.steps_seen += 1;
  if (attention_ratio(record) < config.alpha)
    state.run_length += 1;
  else
    state.run_length = 0;

  if (state.run_length >= config.window) {
    state.run_length = config.window;
    state.triggered_at = state.steps_seen;
    return {state, {VavVerdictKind::Triggered, state.steps_seen}};
  }
  if (state.steps_seen >= config.max_prefix_tokens)
    return {state, {VavVerdictKind::Capped, config.max_prefix_tokens}};
  return {state, {}};
}

/// Reference scan over a complete record sequence. No cap is applied.
inline std::optional<std::size_t> vav_offline(std::span<const StepRecord> records,
                                              const RunConfig& config) {
  const std::size_t w = config.window;
  for (std::size_t j = w; j <= records.size(); ++j) {
    bool all_low = true;
    for (std::size_t k = j - w + 1; k <= j && all_low; ++k)
      all_low = attention_ratio(records[k - 1]) < config.alpha;
    if (all_low) return j;
  }
  return std::nullopt;
}

}  // namespace sstr
