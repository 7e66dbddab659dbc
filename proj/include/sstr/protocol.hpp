// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Directive protocol for live producers.
//
// A producer sends (run_id, candidate_id, StepRecord, is_eos) for every
// generated token and receives one of
//
//   Continue                    keep generating this candidate
//   Freeze(prefix_len, reason)  stop; wait for the selection outcome
//   Winner(n*, resume_from)     this candidate won; resume after resume_from
//   Halt                        discard this candidate
//
// Selection happens as soon as the last candidate freezes; the request that
// completes the barrier receives Winner or Halt directly, the others learn
// the outcome through poll(). Records sent to a frozen or halted candidate
// are dropped and answered with the candidate's current directive. After
// Winner, records continue the winner; its final record (is_eos) is answered
// with Halt.

#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include <json.hpp>

#include "sstr/controller.hpp"
#include "sstr/report_json.hpp"

namespace sstr::protocol {

struct StepRequest {
  std::string run_id;
  std::size_t candidate_id = 0;
  StepRecord record;
  bool is_eos = false;
};

enum class Kind { Continue, Freeze, Winner, Halt };

constexpr std::string_view to_string(Kind k) noexcept {
  switch (k) {
    case Kind::Continue: return "continue";
    case Kind::Freeze: return "freeze";
    case Kind::Winner: return "winner";
    case Kind::Halt: return "halt";
  }
  return "?";
}

struct Response {
  Kind kind = Kind::Continue;
  std::size_t prefix_len = 0;      // Freeze
  FreezeReason reason = FreezeReason::Eos;  // Freeze
  std::size_t winner = 0;          // Winner
  std::size_t resume_from = 0;     // Winner

  friend bool operator==(const Response&, const Response&) = default;
};

inline ojson to_json(const StepRequest& req) {
  return {
      {"run_id", req.run_id},
      {"candidate_id", req.candidate_id},
      {"record", sstr::to_json(req.record)},
      {"is_eos", req.is_eos},
  };
}

inline StepRequest request_from_json(const ojson& j) {
  try {
    StepRequest req;
    req.run_id = j.at("run_id").get<std::string>();
    req.candidate_id = j.at("candidate_id").get<std::size_t>();
    req.record = step_from_json(j.at("record"));
    req.is_eos = j.at("is_eos").get<bool>();
    return req;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("request: ") + e.what());
  }
}

inline ojson to_json(const Response& r) {
  ojson j = {{"directive", std::string(to_string(r.kind))}};
  if (r.kind == Kind::Freeze) {
    j["prefix_len"] = r.prefix_len;
    j["reason"] = std::string(to_string(r.reason));
  } else if (r.kind == Kind::Winner) {
    j["winner"] = r.winner;
    j["resume_from"] = r.resume_from;
  }
  return j;
}

/// Routes requests to the controller of each open run.
class Hub {
 public:
  void open_run(const std::string& run_id, VideoContext video,
                const RunConfig& config) {
    std::lock_guard lock(mutex_);
    if (runs_.count(run_id))
      throw Error(ErrorCode::InvalidInput, "run '" + run_id + "' already open");
    runs_.emplace(run_id, Run{Controller(std::move(video), config), {}});
  }

  void close_run(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    runs_.erase(run_id);
  }

  Response submit(StepRequest req) {
    std::lock_guard lock(mutex_);
    Run& run = find(req.run_id);
    Controller& ctl = run.controller;
    const CandidateStatus status = ctl.status(req.candidate_id);

    if (status == CandidateStatus::Winner) {
      if (run.winner_done) return {Kind::Halt};
      ctl.continue_winner(std::move(req.record));
      if (req.is_eos) {
        run.winner_done = true;
        return {Kind::Halt};
      }
      return {Kind::Continue};
    }
    if (status != CandidateStatus::Generating)
      return directive_for(ctl, req.candidate_id);

    const Directive d =
        ctl.ingest_step(req.candidate_id, std::move(req.record), req.is_eos);
    if (d == Directive::Continue) return {Kind::Continue};
    if (ctl.all_frozen()) {
      const SelectionReport rep = ctl.select_winner();
      // A winner frozen at end of sequence has nothing left to generate.
      run.winner_done = ctl.frozen_at(rep.winner).second == FreezeReason::Eos;
      return directive_for(ctl, req.candidate_id);
    }
    return directive_for(ctl, req.candidate_id);
  }

  /// Current directive for a candidate without sending a record.
  Response poll(const std::string& run_id, std::size_t candidate_id) {
    std::lock_guard lock(mutex_);
    return directive_for(find(run_id).controller, candidate_id);
  }

  SelectionReport report(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    return find(run_id).controller.report();
  }

 private:
  struct Run {
    Controller controller;
    bool winner_done = false;
  };

  Run& find(const std::string& run_id) {
    auto it = runs_.find(run_id);
    if (it == runs_.end())
      throw Error(ErrorCode::UnknownRun, "'" + run_id + "'");
    return it->second;
  }

  static Response directive_for(const Controller& ctl, std::size_t id) {
    switch (ctl.status(id)) {
      case CandidateStatus::Generating:
        return {Kind::Continue};
      case CandidateStatus::Frozen: {
        const auto r = ctl.frozen_at(id);
        return {Kind::Freeze, r.first, r.second};
      }
      case CandidateStatus::Winner: {
        const auto [prefix, reason] = ctl.frozen_at(id);
        return {Kind::Winner, 0, reason, id, prefix};
      }
      case CandidateStatus::Halted:
        return {Kind::Halt};
    }
    return {Kind::Halt};
  }

  std::mutex mutex_;
  std::map<std::string, Run> runs_;
};

}  // namespace sstr::protocol
