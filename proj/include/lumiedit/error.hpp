#pragma once

#include <stdexcept>
#include <string>

namespace lumiedit {

enum class ErrorKind {
  kMissingFile,
  kDimensionMismatch,
  kMalformed,
  kNonFinite,
  kInvalidArgument,
  kOutOfRange,
  kDegenerate,
  kDisabledLight,
  kDivergence,
  kSaturated,
  kNotFound,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::kMissingFile: return "missing_file";
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kMalformed: return "malformed";
    case ErrorKind::kNonFinite: return "non_finite";
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kOutOfRange: return "out_of_range";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kDisabledLight: return "disabled_light";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kSaturated: return "saturated";
    case ErrorKind::kNotFound: return "not_found";
  }
  return "unknown";
}

// Every failure carries a kind and the offending field (e.g. "rasters.normal",
// "lights[2].radiance.sun.lambda") so callers can report it precisely.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        kind_(kind),
        field_(std::move(field)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& field() const { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace lumiedit
