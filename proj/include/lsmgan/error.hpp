#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsmgan {

enum class ErrorCode {
  InvalidConfig,
  LengthNotDivisible,
  SignalTooShort,
  DegenerateRange,
  IndivisibleBlockCount,
  BlockMismatch,
  TooFewBlocks,
  EmptyInput,
  DegenerateInput,
  EmptySet,
  LengthMismatch,
  ShapeMismatch,
  NonScalarLoss,
  NumericalError,
  BatchMismatch,
  DomainError,
  InsufficientData,
  EmptyPool,
  IndivisibleLength,
  MissingGenerator,
  TargetBelowCurrent,
  SingleClassCorpus,
  LeakageDetected,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a stable code so callers (and
// the CLI's machine-readable error record) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lsmgan
