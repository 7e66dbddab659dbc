// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Temporal segmentation of a video from motion-aware patch matching between
// consecutive frames.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sstr/assignment.hpp"
#include "sstr/error.hpp"
#include "sstr/trace_model.hpp"

namespace sstr {

struct Segment {
  std::size_t start = 1;  // inclusive, 1-based
  std::size_t end = 1;    // inclusive, 1-based

  std::size_t size() const noexcept { return end - start + 1; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Partition of frames [1, T] into K contiguous segments.
struct Segmentation {
  std::size_t frames = 0;
  /// 1-based frames that begin a new segment, ascending, each in [2, T].
  std::vector<std::size_t> boundaries;
  std::vector<Segment> segments;
  /// distances[i] is d_{i+2}, the cost between frames i+1 and i+2.
  std::vector<double> distances;
  double gamma_used = 0.0;

  std::size_t k() const noexcept { return segments.size(); }
};

namespace detail {

// Four independent partial sums. Norms and dot products share this routine,
// so dot(a, a) equals the squared norm bit for bit.
inline double dot4(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

/// Pairwise cost between patch i of the previous frame and patch j of the
/// current one: cosine distance of the embeddings plus Euclidean distance of
/// the normalized coordinates. Inputs are row-major, M x D and M x 2.
inline Matrix motion_cost_matrix(std::span<const float> prev_embeds,
                                 std::span<const float> prev_coords,
                                 std::span<const float> cur_embeds,
                                 std::span<const float> cur_coords,
                                 std::size_t embed_dim) {
  if (embed_dim == 0 || prev_embeds.size() % embed_dim != 0)
    throw Error(ErrorCode::DimensionMismatch, "embedding buffer");
  const std::size_t m_count = prev_embeds.size() / embed_dim;
  if (m_count == 0 || cur_embeds.size() != prev_embeds.size() ||
      prev_coords.size() != 2 * m_count || cur_coords.size() != 2 * m_count)
    throw Error(ErrorCode::DimensionMismatch, "frame buffers disagree");

  const std::vector<double> prev(prev_embeds.begin(), prev_embeds.end());
  const std::vector<double> cur(cur_embeds.begin(), cur_embeds.end());
  auto sq_norms = [&](const std::vector<double>& e, const char* which) {
    std::vector<double> out(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      const double* v = e.data() + m * embed_dim;
      const double s = detail::dot4(v, v, embed_dim);
      if (!std::isfinite(s))
        throw Error(ErrorCode::NonFinite, std::string(which) + " embedding");
      if (s == 0.0)
        throw Error(ErrorCode::ZeroVector,
                    std::string(which) + " patch " + std::to_string(m));
      out[m] = s;
    }
    return out;
  };
  const auto prev_n2 = sq_norms(prev, "previous");
  const auto cur_n2 = sq_norms(cur, "current");

  Matrix cost(m_count, m_count);
  for (std::size_t i = 0; i < m_count; ++i) {
    const double* a = prev.data() + i * embed_dim;
    const double ax = prev_coords[2 * i];
    const double ay = prev_coords[2 * i + 1];
    for (std::size_t j = 0; j < m_count; ++j) {
      const double dot = detail::dot4(a, cur.data() + j * embed_dim, embed_dim);
      // sqrt(x*x) == x in IEEE arithmetic, so identical vectors give exactly 1.
      const double cosine = std::clamp(dot / std::sqrt(prev_n2[i] * cur_n2[j]), -1.0, 1.0);
      // Coordinates lie in [0, 1]; no overflow guard needed.
      const double dx = static_cast<double>(cur_coords[2 * j]) - ax;
      const double dy = static_cast<double>(cur_coords[2 * j + 1]) - ay;
      cost(i, j) = (1.0 - cosine) + std::sqrt(dx * dx + dy * dy);
    }
  }
  return cost;
}

inline Matrix motion_cost_matrix(const VideoContext& video, std::size_t t) {
  return motion_cost_matrix(video.frame_embeddings(t - 1),
                            video.frame_coords(t - 1),
                            video.frame_embeddings(t), video.frame_coords(t),
                            video.embed_dim());
}

/// d_t for t = 2..T: minimum total matching cost between frames t-1 and t.
/// Returns an empty vector for single-frame videos.
inline std::vector<double> inter_frame_distances(
    const VideoContext& video,
    MatchingMethod method = MatchingMethod::Exact) {
  std::vector<double> out;
  if (video.frames() < 2) return out;
  out.reserve(video.frames() - 1);
  for (std::size_t t = 1; t < video.frames(); ++t) {
    const Matrix cost = motion_cost_matrix(video, t);
    const Matching m = method == MatchingMethod::Exact
                           ? min_cost_matching(cost)
                           : greedy_matching(cost);
    out.push_back(m.total_cost);
  }
  return out;
}

/// Fixed passes through; Auto returns mean + c * population stddev.
inline double resolve_gamma(std::span<const double> distances,
                            const GammaMode& mode) {
  if (const auto* fixed = std::get_if<GammaFixed>(&mode)) return fixed->value;
  const double c = std::get<GammaAuto>(mode).c;
  if (distances.empty())
    throw Error(ErrorCode::EmptyDistances,
                "automatic threshold needs at least two frames");
  const double n = static_cast<double>(distances.size());
  double mean = 0.0;
  for (double d : distances) mean += d;
  mean /= n;
  // Second pass corrects the rounding of the first, so a constant input
  // yields its own value exactly.
  double corr = 0.0;
  for (double d : distances) corr += d - mean;
  mean += corr / n;
  double var = 0.0;
  for (double d : distances) var += (d - mean) * (d - mean);
  return mean + c * std::sqrt(var / n);
}

inline double resolve_gamma(std::span<const double> distances,
                            const RunConfig& config) {
  return resolve_gamma(distances, config.gamma_mode);
}

/// Frame t >= 2 opens a new segment iff d_t > gamma (strict).
inline Segmentation segment_video(std::span<const double> distances,
                                  double gamma) {
  Segmentation seg;
  seg.frames = distances.size() + 1;
  seg.distances.assign(distances.begin(), distances.end());
  seg.gamma_used = gamma;
  std::size_t start = 1;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const std::size_t t = i + 2;
    if (distances[i] > gamma) {
      seg.boundaries.push_back(t);
      seg.segments.push_back({start, t - 1});
      start = t;
    }
  }
  seg.segments.push_back({start, seg.frames});
  return seg;
}

/// Distances, threshold and partition in one call. For a single-frame video
/// the partition is the one segment [1, 1] regardless of mode, with
/// gamma_used = +inf under Auto.
inline Segmentation segment(const VideoContext& video, const RunConfig& config) {
  const auto distances = inter_frame_distances(video, config.matching);
  double gamma = std::numeric_limits<double>::infinity();
  if (!distances.empty() || std::holds_alternative<GammaFixed>(config.gamma_mode))
    gamma = resolve_gamma(distances, config.gamma_mode);
  return segment_video(distances, gamma);
}

}  // namespace sstr
