// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// JSON encodings of segmentation, scores and selection reports. Field order
// is fixed so that identical results serialize to identical bytes.

#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "sstr/controller.hpp"
#include "sstr/segmenter.hpp"
#include "sstr/tac.hpp"

namespace sstr {

using ojson = nlohmann::ordered_json;

/// Non-finite values are not representable in JSON numbers; they are written
/// as the strings "inf", "-inf" and "nan".
inline ojson json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline ojson to_json(const Segmentation& seg) {
  ojson segments = ojson::array();
  for (const auto& s : seg.segments) segments.push_back({s.start, s.end});
  return {
      {"frames", seg.frames},
      {"k", seg.k()},
      {"boundaries", seg.boundaries},
      {"segments", std::move(segments)},
      {"distances", seg.distances},
      {"gamma_used", json_number(seg.gamma_used)},
  };
}

inline ojson to_json(const TacScore& s) {
  return {
      {"s_f", s.s_f},
      {"s_c", s.s_c},
      {"total", s.total},
      {"frame_profile", s.frame_profile},
  };
}

inline ojson to_json(const SelectionReport& r) {
  ojson cands = ojson::array();
  for (const auto& c : r.candidates) {
    cands.push_back({
        {"candidate_id", c.candidate_id},
        {"prefix_len", c.prefix_len},
        {"freeze_reason", std::string(to_string(c.freeze_reason))},
        {"degenerate", c.degenerate()},
        {"generated", c.generated},
        {"tac", c.tac ? to_json(*c.tac) : ojson(nullptr)},
    });
  }
  return {
      {"winner", r.winner},
      {"resume_from", r.resume_from},
      {"segments", r.segments},
      {"gamma_used", json_number(r.gamma_used)},
      {"decode_tokens_spent", r.decode_tokens_spent},
      {"decode_tokens_baseline", r.decode_tokens_baseline},
      {"savings_fraction", r.savings_fraction},
      {"candidates", std::move(cands)},
  };
}

inline ojson to_json(const StepRecord& rec) {
  return {
      {"token_id", rec.token_id},
      {"frame_attention", rec.frame_attention},
      {"text_attention", rec.text_attention},
  };
}

inline StepRecord step_from_json(const nlohmann::ordered_json& j) {
  try {
    StepRecord rec;
    rec.token_id = j.at("token_id").get<std::uint32_t>();
    rec.frame_attention = j.at("frame_attention").get<std::vector<float>>();
    rec.text_attention = j.at("text_attention").get<float>();
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("record: ") + e.what());
  }
}

}  // namespace sstr
