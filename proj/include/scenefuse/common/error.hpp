#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sf {

/// Failure categories raised across the library. Each public operation
/// documents which kinds it can throw.
enum class ErrorKind {
  format,
  unsupported_codec,
  too_short,
  spec,
  domain,
  too_few_frames,
  shape,
  degenerate_channel,
  degenerate_batch,
  state,
  label,
  too_small_batch,
  numeric,
  data,
  provenance,
  alignment,
  corruption,
  degenerate_fusion,
  io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::format: return "format";
    case ErrorKind::unsupported_codec: return "unsupported-codec";
    case ErrorKind::too_short: return "too-short";
    case ErrorKind::spec: return "spec";
    case ErrorKind::domain: return "domain";
    case ErrorKind::too_few_frames: return "too-few-frames";
    case ErrorKind::shape: return "shape";
    case ErrorKind::degenerate_channel: return "degenerate-channel";
    case ErrorKind::degenerate_batch: return "degenerate-batch";
    case ErrorKind::state: return "state";
    case ErrorKind::label: return "label";
    case ErrorKind::too_small_batch: return "too-small-batch";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::data: return "data";
    case ErrorKind::provenance: return "provenance";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::corruption: return "corruption";
    case ErrorKind::degenerate_fusion: return "degenerate-fusion";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sf
