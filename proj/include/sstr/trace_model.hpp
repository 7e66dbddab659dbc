// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Canonical in-memory representation of an encoded video, the sampled
// candidate responses and the run configuration.
//
// Frame, segment and step indices exposed to callers are 1-based. Storage is
// 0-based and row-major. Attention and embedding values are kept as f32 (the
// on-disk precision); every score is computed in f64.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sstr/error.hpp"

namespace sstr {

/// Patch embeddings and normalized patch coordinates for T frames of M
/// patches each.
class VideoContext {
 public:
  VideoContext() = default;

  /// Allocates a zero-filled context. Coordinates are set to grid-cell
  /// centers, x along grid_w and y along grid_h.
  VideoContext(std::size_t frames, std::size_t grid_h, std::size_t grid_w,
               std::size_t embed_dim)
      : frames_(frames),
        grid_h_(grid_h),
        grid_w_(grid_w),
        embed_dim_(embed_dim),
        embeddings_(frames * grid_h * grid_w * embed_dim, 0.0f),
        coords_(frames * grid_h * grid_w * 2, 0.0f) {
    const std::size_t m_count = patches_per_frame();
    for (std::size_t t = 0; t < frames_; ++t) {
      for (std::size_t m = 0; m < m_count; ++m) {
        const std::size_t row = m / grid_w_;
        const std::size_t col = m % grid_w_;
        auto uv = coord(t, m);
        uv[0] = static_cast<float>((static_cast<double>(col) + 0.5) /
                                   static_cast<double>(grid_w_));
        uv[1] = static_cast<float>((static_cast<double>(row) + 0.5) /
                                   static_cast<double>(grid_h_));
      }
    }
  }

  /// Wraps existing buffers. Sizes are checked by validate_video, not here,
  /// so that a reader can surface a precise violation list.
  VideoContext(std::size_t frames, std::size_t grid_h, std::size_t grid_w,
               std::size_t embed_dim, std::vector<float> embeddings,
               std::vector<float> coords)
      : frames_(frames),
        grid_h_(grid_h),
        grid_w_(grid_w),
        embed_dim_(embed_dim),
        embeddings_(std::move(embeddings)),
        coords_(std::move(coords)) {}

  std::size_t frames() const noexcept { return frames_; }
  std::size_t patches_per_frame() const noexcept { return grid_h_ * grid_w_; }
  std::size_t embed_dim() const noexcept { return embed_dim_; }
  std::size_t grid_h() const noexcept { return grid_h_; }
  std::size_t grid_w() const noexcept { return grid_w_; }

  // 0-based accessors.
  std::span<const float> embedding(std::size_t t, std::size_t m) const {
    return {embeddings_.data() + (t * patches_per_frame() + m) * embed_dim_,
            embed_dim_};
  }
  std::span<float> embedding(std::size_t t, std::size_t m) {
    return {embeddings_.data() + (t * patches_per_frame() + m) * embed_dim_,
            embed_dim_};
  }
  std::span<const float> frame_embeddings(std::size_t t) const {
    const std::size_t n = patches_per_frame() * embed_dim_;
    return {embeddings_.data() + t * n, n};
  }
  std::span<const float> coord(std::size_t t, std::size_t m) const {
    return {coords_.data() + (t * patches_per_frame() + m) * 2, 2};
  }
  std::span<float> coord(std::size_t t, std::size_t m) {
    return {coords_.data() + (t * patches_per_frame() + m) * 2, 2};
  }
  std::span<const float> frame_coords(std::size_t t) const {
    const std::size_t n = patches_per_frame() * 2;
    return {coords_.data() + t * n, n};
  }

  const std::vector<float>& embeddings() const noexcept { return embeddings_; }
  const std::vector<float>& coords() const noexcept { return coords_; }
  std::vector<float>& embeddings() noexcept { return embeddings_; }
  std::vector<float>& coords() noexcept { return coords_; }

  friend bool operator==(const VideoContext&, const VideoContext&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t grid_h_ = 0;
  std::size_t grid_w_ = 0;
  std::size_t embed_dim_ = 0;
  std::vector<float> embeddings_;
  std::vector<float> coords_;
};

/// Attention summary of one generated token, pre-averaged over heads and
/// layers by the producer.
struct StepRecord {
  std::uint32_t token_id = 0;
  /// Attention mass onto all patches of each frame; length T.
  std::vector<float> frame_attention;
  /// Attention mass onto previously generated response tokens.
  float text_attention = 0.0f;

  /// Total visual attention of this step, in f64.
  double visual_attention() const noexcept {
    double sum = 0.0;
    for (float v : frame_attention) sum += static_cast<double>(v);
    return sum;
  }

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct CandidateTrace {
  std::uint32_t candidate_id = 0;
  std::vector<StepRecord> steps;
  bool finished = false;

  std::size_t length() const noexcept { return steps.size(); }

  friend bool operator==(const CandidateTrace&, const CandidateTrace&) =
      default;
};

/// Segmentation threshold resolved per video as mean + c * stddev of the
/// inter-frame distances.
struct GammaAuto {
  double c = 1.0;
};
struct GammaFixed {
  double value = 0.0;
};
using GammaMode = std::variant<GammaAuto, GammaFixed>;

enum class MatchingMethod {
  Exact,
  /// Cheapest-edge-first approximation for very large patch counts. Not
  /// optimal; off by default.
  Greedy,
};

struct RunConfig {
  double alpha = 1.2;
  std::size_t window = 10;
  GammaMode gamma_mode = GammaAuto{};
  std::size_t n_candidates = 10;
  std::size_t max_prefix_tokens = 512;
  MatchingMethod matching = MatchingMethod::Exact;
};

/// Which text tokens the producer folded into text_attention.
enum class TextAttentionConvention {
  GeneratedOnly,
  GeneratedAndPrompt,
};

constexpr std::string_view to_string(TextAttentionConvention c) noexcept {
  return c == TextAttentionConvention::GeneratedOnly ? "generated"
                                                      : "generated+prompt";
}

struct Violation {
  ErrorCode code;
  std::string path;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return ok(); }

  /// Throws an Error built from the first violation, if any.
  void throw_if_failed() const {
    if (!violations.empty()) {
      const auto& v = violations.front();
      throw Error(v.code, v.path + ": " + v.message);
    }
  }
};

namespace detail {

inline void add(ValidationResult& r, ErrorCode code, std::string path,
                std::string message) {
  r.violations.push_back({code, std::move(path), std::move(message)});
}

}  // namespace detail

/// Structural checks on a video alone.
inline ValidationResult validate_video(const VideoContext& video) {
  ValidationResult r;
  if (video.frames() == 0)
    detail::add(r, ErrorCode::InvalidShape, "video.frames", "must be >= 1");
  if (video.grid_h() == 0 || video.grid_w() == 0)
    detail::add(r, ErrorCode::InvalidShape, "video.grid", "must be >= 1x1");
  if (video.embed_dim() == 0)
    detail::add(r, ErrorCode::InvalidShape, "video.embed_dim", "must be >= 1");
  if (!r.ok()) return r;

  const std::size_t T = video.frames();
  const std::size_t M = video.patches_per_frame();
  const std::size_t D = video.embed_dim();
  if (video.embeddings().size() != T * M * D) {
    detail::add(r, ErrorCode::DimensionMismatch, "video.patch_embeddings",
                "expected " + std::to_string(T * M * D) + " values, got " +
                    std::to_string(video.embeddings().size()));
  }
  if (video.coords().size() != T * M * 2) {
    detail::add(r, ErrorCode::DimensionMismatch, "video.patch_coords",
                "expected " + std::to_string(T * M * 2) + " values, got " +
                    std::to_string(video.coords().size()));
  }
  if (!r.ok()) return r;

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t m = 0; m < M; ++m) {
      const std::string where = "video[" + std::to_string(t + 1) + "][" +
                                std::to_string(m) + "]";
      double norm2 = 0.0;
      bool finite = true;
      for (float v : video.embedding(t, m)) {
        if (!std::isfinite(v)) finite = false;
        norm2 += static_cast<double>(v) * static_cast<double>(v);
      }
      if (!finite) {
        detail::add(r, ErrorCode::NonFinite, where + ".embedding",
                    "non-finite value");
      } else if (norm2 == 0.0) {
        detail::add(r, ErrorCode::ZeroVector, where + ".embedding",
                    "zero-norm embedding");
      }
      for (float c : video.coord(t, m)) {
        if (!std::isfinite(c)) {
          detail::add(r, ErrorCode::NonFinite, where + ".coord",
                      "non-finite value");
        } else if (c < 0.0f || c > 1.0f) {
          detail::add(r, ErrorCode::OutOfRange, where + ".coord",
                      "component outside [0,1]");
        }
      }
    }
  }
  return r;
}

/// Checks one candidate against the video's frame count.
inline void validate_candidate(const CandidateTrace& cand, std::size_t frames,
                               const std::string& prefix,
                               ValidationResult& r) {
  for (std::size_t j = 0; j < cand.steps.size(); ++j) {
    const auto& step = cand.steps[j];
    const std::string where = prefix + ".steps[" + std::to_string(j + 1) + "]";
    if (step.frame_attention.size() != frames) {
      detail::add(r, ErrorCode::DimensionMismatch, where + ".frame_attention",
                  "length " + std::to_string(step.frame_attention.size()) +
                      " != frames " + std::to_string(frames));
    }
    for (float a : step.frame_attention) {
      if (!std::isfinite(a)) {
        detail::add(r, ErrorCode::NonFinite, where + ".frame_attention",
                    "non-finite value");
        break;
      }
      if (a < 0.0f) {
        detail::add(r, ErrorCode::NegativeValue, where + ".frame_attention",
                    "negative value");
        break;
      }
    }
    if (!std::isfinite(step.text_attention)) {
      detail::add(r, ErrorCode::NonFinite, where + ".text_attention",
                  "non-finite value");
    } else if (step.text_attention < 0.0f) {
      detail::add(r, ErrorCode::NegativeValue, where + ".text_attention",
                  "negative value");
    }
  }
}

inline ValidationResult validate_config(const RunConfig& config) {
  ValidationResult r;
  if (!(config.alpha > 0.0) || !std::isfinite(config.alpha))
    detail::add(r, ErrorCode::InvalidConfig, "config.alpha",
                "must be finite and > 0");
  if (config.window < 1)
    detail::add(r, ErrorCode::InvalidConfig, "config.window", "must be >= 1");
  if (config.n_candidates < 1)
    detail::add(r, ErrorCode::InvalidConfig, "config.n_candidates",
                "must be >= 1");
  if (config.max_prefix_tokens < config.window)
    detail::add(r, ErrorCode::InvalidConfig, "config.max_prefix_tokens",
                "must be >= window");
  if (const auto* a = std::get_if<GammaAuto>(&config.gamma_mode)) {
    if (!std::isfinite(a->c))
      detail::add(r, ErrorCode::InvalidConfig, "config.gamma_mode.c",
                  "must be finite");
  } else {
    const double v = std::get<GammaFixed>(config.gamma_mode).value;
    if (std::isnan(v) || v < 0.0)
      detail::add(r, ErrorCode::InvalidConfig, "config.gamma_mode.value",
                  "must be >= 0");
  }
  return r;
}

/// Video plus candidate checks. An empty candidate set is accepted here.
inline ValidationResult validate_trace(
    const VideoContext& video, std::span<const CandidateTrace> candidates) {
  ValidationResult r = validate_video(video);
  std::vector<bool> seen(candidates.size(), false);
  for (std::size_t n = 0; n < candidates.size(); ++n) {
    const auto& cand = candidates[n];
    const std::string where = "candidates[" + std::to_string(n) + "]";
    if (cand.candidate_id >= candidates.size()) {
      detail::add(r, ErrorCode::OutOfRange, where + ".candidate_id",
                  "id " + std::to_string(cand.candidate_id) +
                      " outside [0, N)");
    } else if (seen[cand.candidate_id]) {
      detail::add(r, ErrorCode::InvalidInput, where + ".candidate_id",
                  "duplicate id " + std::to_string(cand.candidate_id));
    } else {
      seen[cand.candidate_id] = true;
    }
    validate_candidate(cand, video.frames(), where, r);
  }
  return r;
}

/// Full check of a run: video, every candidate and the configuration.
/// Side-effect free; returns every violation found with its path.
inline ValidationResult validate(const VideoContext& video,
                                 std::span<const CandidateTrace> candidates,
                                 const RunConfig& config) {
  ValidationResult r = validate_trace(video, candidates);
  if (candidates.empty()) {
    detail::add(r, ErrorCode::EmptyCandidateSet, "candidates",
                "at least one candidate is required");
  }
  for (auto& v : validate_config(config).violations)
    r.violations.push_back(std::move(v));
  return r;
}

}  // namespace sstr
