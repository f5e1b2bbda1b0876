#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pabi {

enum class ErrorCode {
  InvalidDistribution,
  SupportMismatch,
  NonPositiveBaseline,
  OutOfRange,
  SingularDenominator,
  DegenerateMarginal,
  PartitionMismatch,
  InfeasibleMask,
  UnmappedLabel,
  EmptyInput,
  UnknownLabelInTraining,
  InfeasiblePrior,
  MissingAlignment,
  ParseError,
  EmptyCorpus,
  IoError,
  ConfigError,
  DegenerateBounds,
  DegenerateSeries,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure in the library surfaces as this one exception type; callers
// that need to branch inspect code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pabi
