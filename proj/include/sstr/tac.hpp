// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Temporal attention collapse scoring. A candidate prefix is summarized by
// the average attention each frame received; the entropy of that profile
// (frame level) and of its aggregation over segments (segment level) are
// summed. Low totals mean attention collapsed onto few frames or segments.
//
// All entropies are in nats with 0 * ln 0 = 0.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sstr/error.hpp"
#include "sstr/segmenter.hpp"
#include "sstr/trace_model.hpp"

namespace sstr {

struct TacScore {
  double s_f = 0.0;
  double s_c = 0.0;
  double total = 0.0;
  /// Normalized per-frame profile used for s_f; sums to 1.
  std::vector<double> frame_profile;
};

/// a_t = (1 / (M * J)) * sum_j frame_attention_j[t] over the given prefix.
inline std::vector<double> frame_attention_profile(
    std::span<const StepRecord> steps, std::size_t frames,
    std::size_t patches_per_frame) {
  if (steps.empty()) throw Error(ErrorCode::EmptyPrefix, "no steps in prefix");
  std::vector<double> a(frames, 0.0);
  for (const auto& step : steps) {
    if (step.frame_attention.size() != frames)
      throw Error(ErrorCode::DimensionMismatch, "frame_attention length");
    for (std::size_t t = 0; t < frames; ++t)
      a[t] += static_cast<double>(step.frame_attention[t]);
  }
  const double scale =
      1.0 / (static_cast<double>(patches_per_frame) *
             static_cast<double>(steps.size()));
  double mass = 0.0;
  for (double& x : a) {
    x *= scale;
    mass += x;
  }
  if (!(mass > 0.0))
    throw Error(ErrorCode::DegenerateAttention, "prefix has zero attention");
  return a;
}

namespace detail {

inline double entropy_of(std::span<const double> weights,
                         std::vector<double>* normalized = nullptr) {
  double mass = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w))
      throw Error(ErrorCode::InvalidInput, "attention must be finite and >= 0");
    mass += w;
  }
  if (!(mass > 0.0))
    throw Error(ErrorCode::DegenerateAttention, "zero total attention");
  // A weight holding most of the mass has p close to 1, where log(p) cancels.
  // Its term is taken from the complement instead: log p = log1p(-rest / S).
  const auto dominant = static_cast<std::size_t>(
      std::max_element(weights.begin(), weights.end()) - weights.begin());
  double rest = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (i != dominant) rest += weights[i];
  double h = 0.0;
  if (normalized) normalized->assign(weights.size(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double p = weights[i] / mass;
    if (normalized) (*normalized)[i] = p;
    if (!(p > 0.0)) continue;
    if (i == dominant && p > 0.5)
      h -= p * std::log1p(-rest / mass);
    else
      h -= p * std::log(p);
  }
  const double upper = std::log(static_cast<double>(weights.size()));
  return std::clamp(h, 0.0, upper);
}

}  // namespace detail

/// Entropy of the normalized frame profile; in [0, ln T].
inline double frame_collapse_score(std::span<const double> a) {
  return detail::entropy_of(a);
}

/// Entropy of attention aggregated over segments; in [0, ln K].
inline double segment_collapse_score(std::span<const double> a,
                                     const Segmentation& seg) {
  if (seg.segments.empty())
    throw Error(ErrorCode::SegmentationMismatch, "empty segmentation");
  std::vector<double> masses;
  masses.reserve(seg.segments.size());
  std::size_t expect = 1;
  for (const auto& s : seg.segments) {
    if (s.start != expect || s.end < s.start || s.end > a.size())
      throw Error(ErrorCode::SegmentationMismatch,
                  "segment [" + std::to_string(s.start) + ", " +
                      std::to_string(s.end) + "] does not tile " +
                      std::to_string(a.size()) + " frames");
    double m = 0.0;
    for (std::size_t t = s.start; t <= s.end; ++t) m += a[t - 1];
    masses.push_back(m);
    expect = s.end + 1;
  }
  if (expect != a.size() + 1)
    throw Error(ErrorCode::SegmentationMismatch,
                "segments cover " + std::to_string(expect - 1) + " of " +
                    std::to_string(a.size()) + " frames");
  return detail::entropy_of(masses);
}

/// Collapse score of a prefix given as its step records.
inline TacScore tac_score(std::span<const StepRecord> prefix,
                          const VideoContext& video, const Segmentation& seg) {
  const auto a = frame_attention_profile(prefix, video.frames(),
                                         video.patches_per_frame());
  TacScore score;
  score.s_f = detail::entropy_of(a, &score.frame_profile);
  score.s_c = segment_collapse_score(a, seg);
  score.total = score.s_f + score.s_c;
  return score;
}

/// Collapse score of candidate steps [1, prefix_len].
inline TacScore tac_score(const CandidateTrace& candidate,
                          std::size_t prefix_len, const VideoContext& video,
                          const Segmentation& seg) {
  if (prefix_len == 0) throw Error(ErrorCode::EmptyPrefix, "prefix_len = 0");
  if (prefix_len > candidate.length())
    throw Error(ErrorCode::OutOfRange,
                "prefix_len " + std::to_string(prefix_len) + " > length " +
                    std::to_string(candidate.length()));
  return tac_score(std::span(candidate.steps).first(prefix_len), video, seg);
}

}  // namespace sstr
