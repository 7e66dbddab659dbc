// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

// Binary trace container (.sstr) and its JSON debug mirror (.sstr.json).
//
// Layout, all integers and floats little-endian:
//
//   "SSTR"                      4 bytes magic
//   version                     u16
//   header_len                  u32
//   header                      header_len bytes of UTF-8 JSON
//   patch_embeddings            T*M*D f32, row-major (t, m, d)
//   patch_coords                T*M*2 f32, row-major (t, m, xy)
//   per candidate:
//     candidate_id              u32
//     length L                  u32
//     finished                  u8 (0 or 1)
//     L records:
//       token_id                u32
//       frame_attention         T f32
//       text_attention          f32
//
// The reader is strict: any byte left over, or a header that disagrees with
// the payload, is an error.

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sstr/error.hpp"
#include "sstr/trace_model.hpp"

namespace sstr {

inline constexpr std::uint16_t kTraceVersion = 1;
inline constexpr char kTraceMagic[4] = {'S', 'S', 'T', 'R'};

struct TraceMetadata {
  std::string producer = "sstr";
  std::string attention_reduction = "mean over heads and layers";
  TextAttentionConvention text_attention =
      TextAttentionConvention::GeneratedOnly;

  friend bool operator==(const TraceMetadata&, const TraceMetadata&) = default;
};

struct TraceData {
  VideoContext video;
  std::vector<CandidateTrace> candidates;
  TraceMetadata metadata;

  friend bool operator==(const TraceData&, const TraceData&) = default;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw Error(ErrorCode::Truncated,
                  std::string(what) + " needs " + std::to_string(n) +
                      " bytes at offset " + std::to_string(pos_) + ", " +
                      std::to_string(remaining()) + " left");
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string_view str(std::size_t n, const char* what) {
    need(n, what);
    std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline TextAttentionConvention parse_convention(const std::string& s) {
  if (s == "generated") return TextAttentionConvention::GeneratedOnly;
  if (s == "generated+prompt") return TextAttentionConvention::GeneratedAndPrompt;
  throw Error(ErrorCode::InvalidInput, "unknown text_attention convention '" + s + "'");
}

inline nlohmann::ordered_json header_json(const VideoContext& video,
                                          std::size_t n_candidates,
                                          const TraceMetadata& meta) {
  nlohmann::ordered_json h;
  h["version"] = kTraceVersion;
  h["frames"] = video.frames();
  h["patches_per_frame"] = video.patches_per_frame();
  h["embed_dim"] = video.embed_dim();
  h["grid"] = {video.grid_h(), video.grid_w()};
  h["candidate_count"] = n_candidates;
  h["producer"] = {
      {"name", meta.producer},
      {"attention_reduction", meta.attention_reduction},
      {"text_attention", std::string(to_string(meta.text_attention))},
  };
  return h;
}

struct Header {
  std::size_t frames, patches, embed_dim, grid_h, grid_w, candidates;
  TraceMetadata meta;
};

template <class Json>
Header parse_header(const Json& h) {
  try {
    Header out{};
    out.frames = h.at("frames").template get<std::size_t>();
    out.patches = h.at("patches_per_frame").template get<std::size_t>();
    out.embed_dim = h.at("embed_dim").template get<std::size_t>();
    const auto& grid = h.at("grid");
    if (!grid.is_array() || grid.size() != 2)
      throw Error(ErrorCode::InvalidInput, "grid must be [h, w]");
    out.grid_h = grid.at(0).template get<std::size_t>();
    out.grid_w = grid.at(1).template get<std::size_t>();
    out.candidates = h.at("candidate_count").template get<std::size_t>();
    const auto& p = h.at("producer");
    out.meta.producer = p.at("name").template get<std::string>();
    out.meta.attention_reduction =
        p.at("attention_reduction").template get<std::string>();
    out.meta.text_attention =
        parse_convention(p.at("text_attention").template get<std::string>());
    if (out.frames == 0 || out.patches == 0 || out.embed_dim == 0)
      throw Error(ErrorCode::InvalidInput, "zero dimension in header");
    constexpr std::size_t kMaxDim = std::size_t{1} << 20;
    if (out.frames > kMaxDim || out.patches > kMaxDim || out.embed_dim > kMaxDim ||
        out.candidates > kMaxDim)
      throw Error(ErrorCode::InvalidInput, "header dimension too large");
    if (out.grid_h > kMaxDim || out.grid_w > kMaxDim ||
        out.grid_h * out.grid_w != out.patches)
      throw Error(ErrorCode::LengthMismatch,
                  "grid " + std::to_string(out.grid_h) + "x" +
                      std::to_string(out.grid_w) + " != patches_per_frame " +
                      std::to_string(out.patches));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("header: ") + e.what());
  }
}

}  // namespace detail

/// Serializes a trace. Throws InvalidInput when the inputs do not validate.
inline std::vector<std::uint8_t> write_trace(
    const VideoContext& video, std::span<const CandidateTrace> candidates,
    const TraceMetadata& metadata = {}) {
  if (auto r = validate_trace(video, candidates); !r.ok()) {
    const auto& v = r.violations.front();
    throw Error(ErrorCode::InvalidInput,
                std::string(to_string(v.code)) + " at " + v.path + ": " + v.message);
  }
  const std::string header = detail::header_json(video, candidates.size(), metadata).dump();

  detail::ByteWriter w;
  w.raw(std::string_view(kTraceMagic, 4));
  w.u16(kTraceVersion);
  w.u32(static_cast<std::uint32_t>(header.size()));
  w.raw(header);
  for (float v : video.embeddings()) w.f32(v);
  for (float v : video.coords()) w.f32(v);
  for (const auto& cand : candidates) {
    w.u32(cand.candidate_id);
    w.u32(static_cast<std::uint32_t>(cand.steps.size()));
    w.u8(cand.finished ? 1 : 0);
    for (const auto& step : cand.steps) {
      w.u32(step.token_id);
      for (float a : step.frame_attention) w.f32(a);
      w.f32(step.text_attention);
    }
  }
  return w.take();
}

inline std::vector<std::uint8_t> write_trace(const TraceData& trace) {
  return write_trace(trace.video, trace.candidates, trace.metadata);
}

/// Exact byte size of a serialized trace with the given header.
inline std::size_t trace_byte_size(std::size_t header_len, const VideoContext& video,
                                   std::span<const CandidateTrace> candidates) {
  const std::size_t T = video.frames(), M = video.patches_per_frame(),
                    D = video.embed_dim();
  std::size_t n = 4 + 2 + 4 + header_len + 4 * (T * M * D + T * M * 2);
  for (const auto& c : candidates) n += 9 + c.steps.size() * (4 + 4 * T + 4);
  return n;
}

inline TraceData read_trace(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < 4 ||
      std::memcmp(bytes.data(), kTraceMagic, 4) != 0)
    throw Error(ErrorCode::BadMagic, "not an sstr trace");
  r.str(4, "magic");
  const std::uint16_t version = r.u16("version");
  if (version == 0 || version > kTraceVersion)
    throw Error(ErrorCode::UnsupportedVersion,
                "version " + std::to_string(version) + ", supported up to " +
                    std::to_string(kTraceVersion));
  const std::uint32_t header_len = r.u32("header length");
  const std::string_view header_text = r.str(header_len, "header");

  nlohmann::json header_doc;
  try {
    header_doc = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("header JSON: ") + e.what());
  }
  if (header_doc.value("version", 0) != version)
    throw Error(ErrorCode::LengthMismatch, "header version disagrees with preamble");
  const detail::Header h = detail::parse_header(header_doc);

  const std::size_t T = h.frames, M = h.patches, D = h.embed_dim;
  r.need(4 * (T * M * D + T * M * 2), "video section");
  std::vector<float> embeds(T * M * D), coords(T * M * 2);
  for (auto& v : embeds) v = r.f32("embedding");
  for (auto& v : coords) v = r.f32("coordinate");

  TraceData out;
  out.video = VideoContext(T, h.grid_h, h.grid_w, D, std::move(embeds), std::move(coords));
  out.metadata = h.meta;
  for (std::size_t n = 0; n < h.candidates; ++n) {
    CandidateTrace cand;
    cand.candidate_id = r.u32("candidate id");
    const std::uint32_t length = r.u32("candidate length");
    const std::uint8_t finished = r.u8("finished flag");
    if (finished > 1)
      throw Error(ErrorCode::InvalidInput, "finished flag must be 0 or 1");
    cand.finished = finished == 1;
    r.need(static_cast<std::size_t>(length) * (8 + 4 * T), "candidate records");
    cand.steps.resize(length);
    for (auto& step : cand.steps) {
      step.token_id = r.u32("token id");
      step.frame_attention.resize(T);
      for (auto& a : step.frame_attention) a = r.f32("frame attention");
      step.text_attention = r.f32("text attention");
    }
    out.candidates.push_back(std::move(cand));
  }
  if (r.remaining() != 0)
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(r.remaining()) + " trailing bytes after last candidate");
  return out;
}

inline void save_trace(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::InvalidInput, "write failed: " + path.string());
}

inline std::vector<std::uint8_t> load_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline TraceData load_trace(const std::filesystem::path& path) {
  const auto bytes = load_bytes(path);
  return read_trace(bytes);
}

/// JSON mirror: the header object extended with "video" and "candidates".
/// Floats are written as their exact f64 widening, so a mirror reads back
/// bit-identical.
inline nlohmann::ordered_json to_json_mirror(const TraceData& trace) {
  auto doc = detail::header_json(trace.video, trace.candidates.size(), trace.metadata);
  doc["video"] = {
      {"patch_embeddings", trace.video.embeddings()},
      {"patch_coords", trace.video.coords()},
  };
  auto cands = nlohmann::ordered_json::array();
  for (const auto& c : trace.candidates) {
    auto steps = nlohmann::ordered_json::array();
    for (const auto& s : c.steps) {
      steps.push_back({{"token_id", s.token_id},
                       {"frame_attention", s.frame_attention},
                       {"text_attention", s.text_attention}});
    }
    cands.push_back({{"candidate_id", c.candidate_id},
                     {"finished", c.finished},
                     {"steps", std::move(steps)}});
  }
  doc["candidates"] = std::move(cands);
  return doc;
}

inline TraceData from_json_mirror(const nlohmann::ordered_json& doc) {
  if (doc.value("version", 0) != kTraceVersion)
    throw Error(ErrorCode::UnsupportedVersion, "mirror version");
  const detail::Header h = detail::parse_header(doc);
  try {
    TraceData out;
    out.metadata = h.meta;
    auto embeds = doc.at("video").at("patch_embeddings").get<std::vector<float>>();
    auto coords = doc.at("video").at("patch_coords").get<std::vector<float>>();
    if (embeds.size() != h.frames * h.patches * h.embed_dim ||
        coords.size() != h.frames * h.patches * 2)
      throw Error(ErrorCode::LengthMismatch, "video arrays disagree with header");
    out.video = VideoContext(h.frames, h.grid_h, h.grid_w, h.embed_dim,
                             std::move(embeds), std::move(coords));
    const auto& cands = doc.at("candidates");
    if (cands.size() != h.candidates)
      throw Error(ErrorCode::LengthMismatch, "candidate count disagrees with header");
    for (const auto& c : cands) {
      CandidateTrace cand;
      cand.candidate_id = c.at("candidate_id").get<std::uint32_t>();
      cand.finished = c.at("finished").get<bool>();
      for (const auto& s : c.at("steps")) {
        StepRecord rec;
        rec.token_id = s.at("token_id").get<std::uint32_t>();
        rec.frame_attention = s.at("frame_attention").get<std::vector<float>>();
        rec.text_attention = s.at("text_attention").get<float>();
        if (rec.frame_attention.size() != h.frames)
          throw Error(ErrorCode::LengthMismatch, "frame_attention length");
        cand.steps.push_back(std::move(rec));
      }
      out.candidates.push_back(std::move(cand));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("mirror: ") + e.what());
  }
}

}  // namespace sstr
