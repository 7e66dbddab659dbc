// Copyright 2026 The sstr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sstr {

enum class ErrorCode {
  // structural validation
  DimensionMismatch,
  NonFinite,
  NegativeValue,
  OutOfRange,
  EmptyCandidateSet,
  InvalidConfig,
  InvalidInput,
  // segmenter
  ZeroVector,
  NonSquare,
  EmptyDistances,
  // scorer
  DegenerateAttention,
  EmptyPrefix,
  SegmentationMismatch,
  // vav / controller
  AlreadyTriggered,
  UnknownCandidate,
  NotGenerating,
  NotAllFrozen,
  AllDegenerate,
  UnknownRun,
  // synth
  InvalidShape,
  InvalidProfile,
  // trace-io
  BadMagic,
  UnsupportedVersion,
  Truncated,
  LengthMismatch,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::EmptyDistances: return "EmptyDistances";
    case ErrorCode::DegenerateAttention: return "DegenerateAttention";
    case ErrorCode::EmptyPrefix: return "EmptyPrefix";
    case ErrorCode::SegmentationMismatch: return "SegmentationMismatch";
    case ErrorCode::AlreadyTriggered: return "AlreadyTriggered";
    case ErrorCode::UnknownCandidate: return "UnknownCandidate";
    case ErrorCode::NotGenerating: return "NotGenerating";
    case ErrorCode::NotAllFrozen: return "NotAllFrozen";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
    case ErrorCode::UnknownRun: return "UnknownRun";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code. All library failures are
/// reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// True for failures caused by degenerate (all-zero) attention rather than
/// malformed data.
constexpr bool is_degenerate(ErrorCode code) noexcept {
  return code == ErrorCode::DegenerateAttention ||
         code == ErrorCode::EmptyPrefix || code == ErrorCode::AllDegenerate;
}

}  // namespace sstr
