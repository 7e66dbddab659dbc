// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Best-of-N run orchestration: per-candidate vanishing-point detection,
// freezing, collapse scoring of the frozen prefixes, winner selection and
// decode-cost accounting.

#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sstr/error.hpp"
#include "sstr/segmenter.hpp"
#include "sstr/tac.hpp"
#include "sstr/trace_model.hpp"
#include "sstr/vav.hpp"

namespace sstr {

enum class FreezeReason { Vav, Eos, Cap };
enum class CandidateStatus { Generating, Frozen, Halted, Winner };
enum class Directive { Continue, Freeze };

constexpr std::string_view to_string(FreezeReason r) noexcept {
  switch (r) {
    case FreezeReason::Vav: return "vav";
    case FreezeReason::Eos: return "eos";
    case FreezeReason::Cap: return "cap";
  }
  return "?";
}

constexpr std::string_view to_string(CandidateStatus s) noexcept {
  switch (s) {
    case CandidateStatus::Generating: return "generating";
    case CandidateStatus::Frozen: return "frozen";
    case CandidateStatus::Halted: return "halted";
    case CandidateStatus::Winner: return "winner";
  }
  return "?";
}

constexpr std::string_view to_string(Directive d) noexcept {
  return d == Directive::Continue ? "continue" : "freeze";
}

struct CandidateResult {
  std::size_t candidate_id = 0;
  std::size_t prefix_len = 0;
  FreezeReason freeze_reason = FreezeReason::Eos;
  /// Absent when the prefix carried no attention; such candidates are
  /// excluded from selection.
  std::optional<TacScore> tac;
  /// Tokens generated for this candidate, including winner continuation.
  std::size_t generated = 0;

  bool degenerate() const noexcept { return !tac.has_value(); }
};

struct SelectionReport {
  std::vector<CandidateResult> candidates;
  std::size_t winner = 0;
  /// The winner resumes generation after this many tokens.
  std::size_t resume_from = 0;
  std::size_t decode_tokens_spent = 0;
  std::size_t decode_tokens_baseline = 0;
  double savings_fraction = 0.0;
  std::size_t segments = 1;
  double gamma_used = 0.0;
};

/// Analytic decode saving when N - 1 losers stop at fraction p of the
/// winner's length and the winner runs to completion: 1 - (1 + (n-1) p) / n.
inline double decode_savings(double prefix_fraction, std::size_t n) {
  if (!(prefix_fraction > 0.0) || prefix_fraction > 1.0)
    throw Error(ErrorCode::OutOfRange, "prefix fraction must be in (0, 1]");
  if (n < 1) throw Error(ErrorCode::OutOfRange, "n must be >= 1");
  const double nd = static_cast<double>(n);
  return 1.0 - (1.0 + (nd - 1.0) * prefix_fraction) / nd;
}

/// State of one N-candidate run. Updates are serialized internally, so
/// producers for different candidates may call in from different threads.
class Controller {
 public:
  Controller(VideoContext video, RunConfig config)
      : video_(std::move(video)),
        config_(config),
        mutex_(std::make_unique<std::mutex>()) {
    validate_video(video_).throw_if_failed();
    validate_config(config_).throw_if_failed();
    segmentation_ = segment(video_, config_);
    slots_.resize(config_.n_candidates);
  }

  const VideoContext& video() const noexcept { return video_; }
  const RunConfig& config() const noexcept { return config_; }
  const Segmentation& segmentation() const noexcept { return segmentation_; }
  std::size_t candidate_count() const noexcept { return slots_.size(); }

  CandidateStatus status(std::size_t candidate_id) const {
    std::lock_guard lock(*mutex_);
    return slot(candidate_id).status;
  }

  /// Prefix length and reason of a frozen (or already selected) candidate.
  std::pair<std::size_t, FreezeReason> frozen_at(std::size_t candidate_id) const {
    std::lock_guard lock(*mutex_);
    const Slot& s = slot(candidate_id);
    if (s.status == CandidateStatus::Generating)
      throw Error(ErrorCode::NotAllFrozen,
                  "candidate " + std::to_string(candidate_id) + " still generating");
    return {s.prefix_len, s.reason};
  }

  /// Buffers one generated token of a candidate. Returns Freeze when the
  /// vanishing point, end of sequence or the prefix cap is reached.
  Directive ingest_step(std::size_t candidate_id, StepRecord record,
                        bool is_eos) {
    std::lock_guard lock(*mutex_);
    Slot& s = slot(candidate_id);
    if (s.status != CandidateStatus::Generating)
      throw Error(ErrorCode::NotGenerating,
                  "candidate " + std::to_string(candidate_id) + " is " +
                      std::string(to_string(s.status)));
    check_record(record);
    s.steps.push_back(std::move(record));
    auto [next, verdict] = vav_step(s.vav, s.steps.back(), config_);
    s.vav = next;
    if (verdict.kind == VavVerdictKind::Triggered) {
      freeze(s, verdict.step, FreezeReason::Vav);
    } else if (is_eos) {
      freeze(s, s.steps.size(), FreezeReason::Eos);
    } else if (verdict.kind == VavVerdictKind::Capped) {
      freeze(s, verdict.step, FreezeReason::Cap);
    }
    return s.status == CandidateStatus::Frozen ? Directive::Freeze
                                               : Directive::Continue;
  }

  /// End of sequence signalled without a further record.
  void finish(std::size_t candidate_id) {
    std::lock_guard lock(*mutex_);
    Slot& s = slot(candidate_id);
    if (s.status != CandidateStatus::Generating)
      throw Error(ErrorCode::NotGenerating,
                  "candidate " + std::to_string(candidate_id));
    freeze(s, s.steps.size(), FreezeReason::Eos);
  }

  bool all_frozen() const {
    std::lock_guard lock(*mutex_);
    return all_frozen_locked();
  }

  bool selected() const {
    std::lock_guard lock(*mutex_);
    return selected_;
  }

  /// Scores every frozen prefix and picks the highest total (ties to the
  /// lowest id). Runs once; later calls return the stored report.
  SelectionReport select_winner() {
    std::lock_guard lock(*mutex_);
    if (selected_) return report_locked();
    if (!all_frozen_locked())
      throw Error(ErrorCode::NotAllFrozen, "selection needs every candidate");

    std::vector<std::optional<TacScore>> scores(slots_.size());
    std::optional<std::size_t> best;
    for (std::size_t n = 0; n < slots_.size(); ++n) {
      const Slot& s = slots_[n];
      try {
        if (s.prefix_len == 0)
          throw Error(ErrorCode::EmptyPrefix, "empty candidate");
        scores[n] = tac_over(s.steps, s.prefix_len);
      } catch (const Error& e) {
        if (!is_degenerate(e.code())) throw;
        continue;
      }
      if (!best || scores[n]->total > scores[*best]->total) best = n;
    }
    if (!best)
      throw Error(ErrorCode::AllDegenerate,
                  "no candidate carried visual attention");

    for (std::size_t n = 0; n < slots_.size(); ++n) {
      slots_[n].tac = std::move(scores[n]);
      slots_[n].status =
          n == *best ? CandidateStatus::Winner : CandidateStatus::Halted;
    }
    winner_ = *best;
    selected_ = true;
    return report_locked();
  }

  /// Feeds a continuation token of the winner after selection.
  void continue_winner(StepRecord record) {
    std::lock_guard lock(*mutex_);
    if (!selected_)
      throw Error(ErrorCode::NotAllFrozen, "no winner selected yet");
    check_record(record);
    slots_[winner_].steps.push_back(std::move(record));
  }

  SelectionReport report() const {
    std::lock_guard lock(*mutex_);
    if (!selected_) throw Error(ErrorCode::NotAllFrozen, "no winner selected");
    return report_locked();
  }

 private:
  struct Slot {
    CandidateStatus status = CandidateStatus::Generating;
    VavState vav;
    std::vector<StepRecord> steps;
    std::size_t prefix_len = 0;
    FreezeReason reason = FreezeReason::Eos;
    std::optional<TacScore> tac;
  };

  Slot& slot(std::size_t id) {
    if (id >= slots_.size())
      throw Error(ErrorCode::UnknownCandidate, std::to_string(id));
    return slots_[id];
  }
  const Slot& slot(std::size_t id) const {
    if (id >= slots_.size())
      throw Error(ErrorCode::UnknownCandidate, std::to_string(id));
    return slots_[id];
  }

  void check_record(const StepRecord& record) const {
    CandidateTrace probe;
    probe.steps.push_back(record);
    ValidationResult r;
    validate_candidate(probe, video_.frames(), "record", r);
    r.throw_if_failed();
  }

  static void freeze(Slot& s, std::size_t prefix_len, FreezeReason reason) {
    s.status = CandidateStatus::Frozen;
    s.prefix_len = prefix_len;
    s.reason = reason;
  }

  bool all_frozen_locked() const {
    return std::all_of(slots_.begin(), slots_.end(), [](const Slot& s) {
      return s.status != CandidateStatus::Generating;
    });
  }

  TacScore tac_over(const std::vector<StepRecord>& steps,
                    std::size_t prefix_len) const {
    return tac_score(std::span(steps).first(prefix_len), video_, segmentation_);
  }

  SelectionReport report_locked() const {
    SelectionReport r;
    r.winner = winner_;
    r.resume_from = slots_[winner_].prefix_len;
    r.segments = segmentation_.k();
    r.gamma_used = segmentation_.gamma_used;
    std::size_t spent = 0;
    for (std::size_t n = 0; n < slots_.size(); ++n) {
      const Slot& s = slots_[n];
      CandidateResult c;
      c.candidate_id = n;
      c.prefix_len = s.prefix_len;
      c.freeze_reason = s.reason;
      c.tac = s.tac;
      c.generated = n == winner_ ? s.steps.size() : s.prefix_len;
      spent += c.generated;
      r.candidates.push_back(std::move(c));
    }
    r.decode_tokens_spent = spent;
    r.decode_tokens_baseline = slots_.size() * slots_[winner_].steps.size();
    r.savings_fraction =
        r.decode_tokens_baseline == 0
            ? 0.0
            : 1.0 - static_cast<double>(spent) /
                        static_cast<double>(r.decode_tokens_baseline);
    return r;
  }

  VideoContext video_;
  RunConfig config_;
  Segmentation segmentation_;
  std::vector<Slot> slots_;
  bool selected_ = false;
  std::size_t winner_ = 0;
  std::unique_ptr<std::mutex> mutex_;
};

inline Controller start_run(VideoContext video, const RunConfig& config) {
  return Controller(std::move(video), config);
}

/// Offline replay of recorded candidates: each is fed until it freezes, the
/// winner is selected, and the rest of the winner's recording stands in for
/// its continued generation. Candidate count is taken from the input.
inline SelectionReport replay(const VideoContext& video,
                              std::span<const CandidateTrace> candidates,
                              RunConfig config) {
  config.n_candidates = candidates.size();
  validate(video, candidates, config).throw_if_failed();

  std::vector<const CandidateTrace*> by_id(candidates.size());
  for (const auto& c : candidates) by_id[c.candidate_id] = &c;

  Controller run(video, config);
  for (std::size_t n = 0; n < by_id.size(); ++n) {
    const auto& steps = by_id[n]->steps;
    bool frozen = false;
    for (std::size_t j = 0; j < steps.size() && !frozen; ++j) {
      const bool eos = by_id[n]->finished && j + 1 == steps.size();
      frozen = run.ingest_step(n, steps[j], eos) == Directive::Freeze;
    }
    // Recording ended without a freeze: treat the end of data as EOS.
    if (!frozen) run.finish(n);
  }
  const SelectionReport first = run.select_winner();
  const auto& winner_steps = by_id[first.winner]->steps;
  for (std::size_t j = first.resume_from; j < winner_steps.size(); ++j)
    run.continue_winner(winner_steps[j]);
  return run.report();
}

}  // namespace sstr
