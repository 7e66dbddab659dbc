// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic synthetic videos and candidate traces with planted shot
// structure, attention collapse patterns and vanishing points.
//
// Randomness comes from std::mt19937_64, whose output sequence is fixed by
// the C++ standard. Raw 64-bit draws are mapped to doubles as
// (x >> 11) * 2^-53 and normals use the Box-Muller transform, so fixtures are
// identical across standard libraries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "sstr/error.hpp"
#include "sstr/segmenter.hpp"
#include "sstr/trace_model.hpp"

namespace sstr::synth {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  std::size_t index(std::size_t lo, std::size_t hi) {
    const auto span = static_cast<double>(hi - lo + 1);
    return lo + std::min(static_cast<std::size_t>(uniform() * span), hi - lo);
  }
  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Largest divisor of m not above sqrt(m); the grid is that many rows.
inline std::size_t grid_rows_for(std::size_t m) {
  std::size_t best = 1;
  for (std::size_t r = 1; r * r <= m; ++r)
    if (m % r == 0) best = r;
  return best;
}

/// First frame (1-based) of each shot when T frames are split evenly.
inline std::vector<std::size_t> shot_starts(std::size_t frames,
                                            std::size_t n_shots) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < n_shots; ++s)
    starts.push_back(s * frames / n_shots + 1);
  return starts;
}

struct VideoOptions {
  /// Per-frame gaussian perturbation of embeddings, relative to unit norm.
  /// Zero makes frames within a shot exact copies.
  double frame_noise = 0.0;
};

/// T frames of M unit-norm patch embeddings. Each shot draws its own cluster
/// center, so transitions are near-orthogonal while frames inside a shot
/// repeat the shot's key frame.
inline VideoContext generate_video(std::uint64_t seed, std::size_t frames,
                                   std::size_t patches, std::size_t embed_dim,
                                   std::size_t n_shots,
                                   const VideoOptions& options = {}) {
  if (frames < 1 || patches < 1 || embed_dim < 2 || n_shots < 1 ||
      n_shots > frames || !(options.frame_noise >= 0.0))
    throw Error(ErrorCode::InvalidShape,
                "need frames >= 1, patches >= 1, dim >= 2, 1 <= shots <= frames");
  Rng rng(seed);
  const std::size_t gh = grid_rows_for(patches);
  VideoContext video(frames, gh, patches / gh, embed_dim);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(embed_dim));

  auto store_normalized = [&](std::size_t t, std::size_t m,
                              std::vector<double>& v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    const double inv = 1.0 / std::sqrt(n2);
    auto dst = video.embedding(t, m);
    for (std::size_t k = 0; k < embed_dim; ++k)
      dst[k] = static_cast<float>(v[k] * inv);
  };

  const auto starts = shot_starts(frames, n_shots);
  std::vector<double> center(embed_dim), v(embed_dim);
  std::vector<std::vector<double>> key(patches, std::vector<double>(embed_dim));
  for (std::size_t s = 0; s < n_shots; ++s) {
    for (auto& c : center) c = rng.normal() * inv_sqrt_d;
    for (std::size_t m = 0; m < patches; ++m)
      for (std::size_t k = 0; k < embed_dim; ++k)
        key[m][k] = center[k] + 0.5 * rng.normal() * inv_sqrt_d;

    const std::size_t first = starts[s] - 1;
    const std::size_t last = s + 1 < n_shots ? starts[s + 1] - 1 : frames;
    for (std::size_t t = first; t < last; ++t) {
      for (std::size_t m = 0; m < patches; ++m) {
        v = key[m];
        if (options.frame_noise > 0.0)
          for (auto& x : v) x += options.frame_noise * rng.normal() * inv_sqrt_d;
        store_normalized(t, m, v);
      }
    }
  }
  return video;
}

struct Uniform {};
/// Fraction `mass` of every step's visual attention on one frame (1-based),
/// the rest spread evenly over the other frames.
struct FrameCollapse {
  std::size_t target_frame = 1;
  double mass = 1.0;
};
/// Fraction `mass` spread evenly over one segment (1-based), the rest over
/// the remaining frames.
struct SegmentCollapse {
  std::size_t target_segment = 1;
  double mass = 1.0;
};
/// Arbitrary per-frame weights, normalized.
struct Mixed {
  std::vector<double> weights;
};
using CollapseProfile = std::variant<Uniform, FrameCollapse, SegmentCollapse, Mixed>;

/// Per-frame distribution (sums to 1) realized by a profile.
inline std::vector<double> profile_distribution(const CollapseProfile& profile,
                                                const Segmentation& seg) {
  const std::size_t T = seg.frames;
  std::vector<double> p(T, 1.0 / static_cast<double>(T));
  auto check_mass = [](double mass) {
    if (!(mass > 0.0) || mass > 1.0)
      throw Error(ErrorCode::InvalidProfile, "mass must be in (0, 1]");
  };

  if (const auto* fc = std::get_if<FrameCollapse>(&profile)) {
    check_mass(fc->mass);
    if (fc->target_frame < 1 || fc->target_frame > T)
      throw Error(ErrorCode::InvalidProfile, "target frame out of range");
    if (T == 1) return p;
    const double rest = (1.0 - fc->mass) / static_cast<double>(T - 1);
    std::fill(p.begin(), p.end(), rest);
    p[fc->target_frame - 1] = fc->mass;
  } else if (const auto* sc = std::get_if<SegmentCollapse>(&profile)) {
    check_mass(sc->mass);
    if (sc->target_segment < 1 || sc->target_segment > seg.k())
      throw Error(ErrorCode::InvalidProfile, "target segment out of range");
    const Segment target = seg.segments[sc->target_segment - 1];
    const std::size_t inside = target.size();
    if (inside == T) return p;
    const double in_each = sc->mass / static_cast<double>(inside);
    const double out_each = (1.0 - sc->mass) / static_cast<double>(T - inside);
    for (std::size_t t = 1; t <= T; ++t)
      p[t - 1] = (t >= target.start && t <= target.end) ? in_each : out_each;
  } else if (const auto* mx = std::get_if<Mixed>(&profile)) {
    if (mx->weights.size() != T)
      throw Error(ErrorCode::InvalidProfile, "mixed weights length != frames");
    double sum = 0.0;
    for (double w : mx->weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw Error(ErrorCode::InvalidProfile, "mixed weights must be >= 0");
      sum += w;
    }
    if (!(sum > 0.0))
      throw Error(ErrorCode::InvalidProfile, "mixed weights sum to zero");
    for (std::size_t t = 0; t < T; ++t) p[t] = mx->weights[t] / sum;
  }
  return p;
}

/// Ratio plan whose window first fills at `trigger_step` (1-based): `high`
/// before the window, `low` from then on. No trigger when absent.
inline std::vector<double> trigger_plan(std::size_t length,
                                        std::optional<std::size_t> trigger_step,
                                        std::size_t window, double high = 2.0,
                                        double low = 1.0) {
  std::vector<double> plan(length, high);
  if (trigger_step) {
    if (*trigger_step < window)
      throw Error(ErrorCode::InvalidProfile, "trigger before a full window");
    for (std::size_t j = *trigger_step - window; j < length; ++j) plan[j] = low;
  }
  return plan;
}

struct CandidateOptions {
  /// Relative multiplicative noise on every frame_attention entry.
  double jitter = 0.0;
  /// Segmentation used to place SegmentCollapse mass; computed from the
  /// video with default settings when absent.
  std::optional<Segmentation> segmentation;
  bool finished = true;
};

/// Jitter used by fuzz and discrimination suites.
inline constexpr double kFuzzJitter = 1e-3;

/// A candidate of `length` steps realizing `profile`, whose visual/text
/// ratio at step j is ratio_plan[j] up to f32 rounding (+inf gives zero
/// text attention).
inline CandidateTrace generate_candidate(std::uint64_t seed,
                                         const VideoContext& video,
                                         const CollapseProfile& profile,
                                         std::size_t length,
                                         std::span<const double> ratio_plan,
                                         const CandidateOptions& options = {},
                                         std::uint32_t candidate_id = 0) {
  if (ratio_plan.size() < length)
    throw Error(ErrorCode::InvalidProfile, "ratio plan shorter than length");
  if (!(options.jitter >= 0.0) || options.jitter >= 1.0)
    throw Error(ErrorCode::InvalidProfile, "jitter must be in [0, 1)");
  const Segmentation seg =
      options.segmentation ? *options.segmentation : segment(video, RunConfig{});
  if (seg.frames != video.frames())
    throw Error(ErrorCode::SegmentationMismatch, "segmentation frame count");
  const auto p = profile_distribution(profile, seg);

  Rng rng(seed);
  CandidateTrace cand;
  cand.candidate_id = candidate_id;
  cand.finished = options.finished;
  cand.steps.reserve(length);
  for (std::size_t j = 0; j < length; ++j) {
    const double ratio = ratio_plan[j];
    if (!(ratio > 0.0))
      throw Error(ErrorCode::InvalidProfile, "ratio plan entries must be > 0");
    StepRecord rec;
    rec.token_id = static_cast<std::uint32_t>(rng.raw() % 32000);
    const double visual = rng.uniform(0.3, 0.7);
    rec.frame_attention.resize(p.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
      const double noise =
          options.jitter > 0.0 ? options.jitter * (2.0 * rng.uniform() - 1.0)
                               : 0.0;
      rec.frame_attention[t] = static_cast<float>(visual * p[t] * (1.0 + noise));
    }
    rec.text_attention =
        std::isinf(ratio)
            ? 0.0f
            : static_cast<float>(rec.visual_attention() / ratio);
    cand.steps.push_back(std::move(rec));
  }
  return cand;
}

enum class ProfileMix {
  /// One Uniform candidate at a random id; the rest FrameCollapse or
  /// SegmentCollapse with random targets and masses.
  Discrimination,
  Uniform,
  Frame,
  Segment,
};

struct ScenarioOptions {
  std::size_t frames = 32;
  std::size_t patches = 196;
  std::size_t embed_dim = 32;
  std::size_t shots = 3;
  std::size_t candidates = 10;
  std::size_t length = 256;
  std::size_t window = 10;
  ProfileMix profiles = ProfileMix::Discrimination;
  /// When set, every candidate vanishes at round(fraction * length).
  /// Otherwise each draws a trigger in [window, length] with probability
  /// 0.8 and runs to the end without one.
  std::optional<double> prefix_fraction;
  double jitter = kFuzzJitter;
};

struct Scenario {
  VideoContext video;
  Segmentation segmentation;
  std::vector<CandidateTrace> candidates;
  /// Id of the Uniform candidate under ProfileMix::Discrimination.
  std::optional<std::uint32_t> uniform_id;
};

inline Scenario generate_scenario(std::uint64_t seed, const ScenarioOptions& o) {
  if (o.candidates < 1 || o.length < 1 || o.window < 1)
    throw Error(ErrorCode::InvalidShape, "need candidates, length, window >= 1");
  std::optional<std::size_t> fixed_trigger;
  if (o.prefix_fraction) {
    const double p = *o.prefix_fraction;
    if (!(p > 0.0) || p > 1.0)
      throw Error(ErrorCode::InvalidProfile, "prefix fraction must be in (0, 1]");
    fixed_trigger = static_cast<std::size_t>(std::llround(p * static_cast<double>(o.length)));
    if (*fixed_trigger < o.window)
      throw Error(ErrorCode::InvalidProfile, "prefix shorter than the window");
  }
  if (o.window > o.length && !fixed_trigger)
    throw Error(ErrorCode::InvalidShape, "window longer than the candidates");

  Rng rng(seed);
  Scenario sc{generate_video(rng.raw(), o.frames, o.patches, o.embed_dim, o.shots),
              {}, {}, std::nullopt};
  sc.segmentation = segment(sc.video, RunConfig{});
  const std::size_t T = o.frames, K = sc.segmentation.k();
  if (o.profiles == ProfileMix::Discrimination)
    sc.uniform_id = static_cast<std::uint32_t>(rng.index(0, o.candidates - 1));

  auto collapsed = [&](bool frame) -> CollapseProfile {
    if (frame) return FrameCollapse{rng.index(1, T), rng.uniform(0.5, 0.95)};
    return SegmentCollapse{rng.index(1, K), rng.uniform(0.6, 0.95)};
  };

  CandidateOptions copts;
  copts.jitter = o.jitter;
  copts.segmentation = sc.segmentation;
  for (std::uint32_t n = 0; n < o.candidates; ++n) {
    CollapseProfile profile = Uniform{};
    switch (o.profiles) {
      case ProfileMix::Discrimination:
        if (n != *sc.uniform_id) profile = collapsed(rng.uniform() < 0.5);
        break;
      case ProfileMix::Uniform: break;
      case ProfileMix::Frame: profile = collapsed(true); break;
      case ProfileMix::Segment: profile = collapsed(false); break;
    }
    std::optional<std::size_t> trigger = fixed_trigger;
    if (!trigger && rng.uniform() < 0.8) trigger = rng.index(o.window, o.length);
    const auto plan = trigger_plan(o.length, trigger, o.window);
    sc.candidates.push_back(
        generate_candidate(rng.raw(), sc.video, profile, o.length, plan, copts, n));
  }
  return sc;
}

}  // namespace sstr::synth
