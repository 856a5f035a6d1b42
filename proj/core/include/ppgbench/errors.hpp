#pragma once

#include <stdexcept>
#include <string>

namespace ppgbench {

// One code per contract violation so callers (and tests) can distinguish
// failure kinds without string matching.
enum class ErrorCode {
  // signal
  EmptySignal,
  TargetShorterThanInput,
  // synth
  InvalidSpec,
  // dataset
  ParseError,
  SchemaError,
  SubjectMismatch,
  TooFewSubjects,
  // baselines
  NoBeats,
  SignalTooShort,
  SingularSystem,
  NoHistory,
  // model
  LengthNotDivisible,
  OddDimension,
  ShapeMismatch,
  InvalidObjective,
  MaskFractionOutOfRange,
  EmptyData,
  NonStochasticRow,
  // eval
  LengthMismatch,
  Empty,
  MissingCell,
  EmptySelection,
  MixedMetricFamilies,
  ZeroHeadPerformance,
  ZeroMean,
  TooFew,
  InsufficientPoints,
  DegenerateSizes,
  ConstantInput,
  ZeroReference,
  SingleModel,
  // cli / fixtures
  MissingFixture,
  IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace ppgbench
