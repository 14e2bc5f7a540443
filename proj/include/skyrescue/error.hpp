#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skyrescue {

// Failure categories named after the contract errors of each module.
enum class ErrorKind {
  invalid_count,
  region_too_small,
  parse_error,
  invariant_violation,
  speed_out_of_range,
  trapped,
  invalid_shape,
  distance_below_reference,
  zero_rate_offload,
  zero_alloc_offload,
  empty_candidates,
  cardinality_mismatch,
  infeasible,
  unassigned_agent,
  length_mismatch,
  action_count_mismatch,
  shape_mismatch,
  stale_tape,
  invalid_range,
  empty_memory,
  too_large,
  missing_artifact,
  io_error,
  usage_error,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_count: return "invalid-count";
    case ErrorKind::region_too_small: return "region-too-small";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::invariant_violation: return "invariant-violation";
    case ErrorKind::speed_out_of_range: return "speed-out-of-range";
    case ErrorKind::trapped: return "trapped";
    case ErrorKind::invalid_shape: return "invalid-shape";
    case ErrorKind::distance_below_reference: return "distance-below-reference";
    case ErrorKind::zero_rate_offload: return "zero-rate-offload";
    case ErrorKind::zero_alloc_offload: return "zero-alloc-offload";
    case ErrorKind::empty_candidates: return "empty-candidates";
    case ErrorKind::cardinality_mismatch: return "cardinality-mismatch";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::unassigned_agent: return "unassigned-agent";
    case ErrorKind::length_mismatch: return "length-mismatch";
    case ErrorKind::action_count_mismatch: return "action-count-mismatch";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
    case ErrorKind::stale_tape: return "stale-tape";
    case ErrorKind::invalid_range: return "invalid-range";
    case ErrorKind::empty_memory: return "empty-memory";
    case ErrorKind::too_large: return "too-large";
    case ErrorKind::missing_artifact: return "missing-artifact";
    case ErrorKind::io_error: return "io-error";
    case ErrorKind::usage_error: return "usage-error";
  }
  return "unknown";
}

}  // namespace skyrescue
