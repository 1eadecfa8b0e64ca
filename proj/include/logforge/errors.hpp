#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace logforge {

/// Why a timestamp string was rejected.
enum class TimestampErrorReason { kBadLength, kNonDigit, kOutOfRange };

inline const char* to_string(TimestampErrorReason r) {
  switch (r) {
    case TimestampErrorReason::kBadLength: return "BAD_LENGTH";
    case TimestampErrorReason::kNonDigit: return "NON_DIGIT";
    case TimestampErrorReason::kOutOfRange: return "OUT_OF_RANGE";
  }
  return "?";
}

class InvalidTimestamp : public std::runtime_error {
 public:
  InvalidTimestamp(TimestampErrorReason reason, const std::string& detail)
      : std::runtime_error(std::string("invalid timestamp (") + to_string(reason) + "): " + detail),
        reason_(reason) {}
  TimestampErrorReason reason() const { return reason_; }

 private:
  TimestampErrorReason reason_;
};

class MissingField : public std::runtime_error {
 public:
  explicit MissingField(const std::string& field)
      : std::runtime_error("missing field: " + field), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class InsufficientData : public std::runtime_error {
 public:
  InsufficientData(std::uint64_t available, std::uint64_t requested)
      : std::runtime_error("insufficient data: " + std::to_string(available) +
                           " usable lines, need " + std::to_string(requested)),
        available_(available) {}
  std::uint64_t available() const { return available_; }

 private:
  std::uint64_t available_;
};

/// A non-finite value showed up in a tensor computation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pipeline stage failed; artifacts of earlier stages stay on disk.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(const std::string& stage, const std::string& cause)
      : std::runtime_error("stage '" + stage + "' failed: " + cause), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// The supposedly-real baseline file failed a sanity check (corrupt ingestion).
class BaselineViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace logforge
