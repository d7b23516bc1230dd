#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace drpipe {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File missing, unreadable, or unwritable.
struct IoError final : Error {
  using Error::Error;
};

/// Malformed input text or binary (wrong column count, truncated file, ...).
struct ParseError final : Error {
  using Error::Error;
};

/// Severity grade outside the admitted range 0..4.
struct GradeOutOfRange final : Error {
  explicit GradeOutOfRange(int value)
      : Error("severity grade out of range [0,4]: " + std::to_string(value)),
        value(value) {}
  int value;
};

struct DuplicateId final : Error {
  explicit DuplicateId(const std::string& id) : Error("duplicate image id: " + id) {}
};

/// A stratum does not hold enough images to satisfy the requested counts.
struct InsufficientStratum final : Error {
  InsufficientStratum(int grade, std::size_t have, std::size_t need)
      : Error("stratum for grade " + std::to_string(grade) + " has " + std::to_string(have) +
              " images, needs " + std::to_string(need)),
        grade(grade), have(have), need(need) {}
  int grade;
  std::size_t have;
  std::size_t need;
};

/// Stored digest does not match the recomputed one (tampered or stale file).
struct ChecksumMismatch final : Error {
  using Error::Error;
};

/// No pixel exceeds the crop threshold (all-black frame).
struct AllBelowThreshold final : Error {
  AllBelowThreshold() : Error("no pixel above crop threshold; all-black frame") {}
};

/// Weight asset missing/corrupted or shape disagreement at load time.
struct IntegrityError final : Error {
  using Error::Error;
};

/// Feature cache was built against a different backbone or preprocess config.
struct StaleCache final : Error {
  using Error::Error;
};

/// Head checkpoint was trained against a different backbone.
struct FingerprintMismatch final : Error {
  using Error::Error;
};

/// Incompatible array dimensions.
struct ShapeMismatch final : Error {
  using Error::Error;
};

/// A required earlier pipeline stage has not produced its artifact yet.
struct MissingPrerequisite final : Error {
  using Error::Error;
};

/// NaN/Inf encountered where a finite value is required (divergence, bad input).
struct NonFiniteError final : Error {
  using Error::Error;
};

}  // namespace drpipe
