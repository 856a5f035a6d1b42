#include "ppgbench/errors.hpp"

namespace ppgbench {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::TargetShorterThanInput: return "TargetShorterThanInput";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::SubjectMismatch: return "SubjectMismatch";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::NoBeats: return "NoBeats";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoHistory: return "NoHistory";
    case ErrorCode::LengthNotDivisible: return "LengthNotDivisible";
    case ErrorCode::OddDimension: return "OddDimension";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidObjective: return "InvalidObjective";
    case ErrorCode::MaskFractionOutOfRange: return "MaskFractionOutOfRange";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::NonStochasticRow: return "NonStochasticRow";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::MixedMetricFamilies: return "MixedMetricFamilies";
    case ErrorCode::ZeroHeadPerformance: return "ZeroHeadPerformance";
    case ErrorCode::ZeroMean: return "ZeroMean";
    case ErrorCode::TooFew: return "TooFew";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::DegenerateSizes: return "DegenerateSizes";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::SingleModel: return "SingleModel";
    case ErrorCode::MissingFixture: return "MissingFixture";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace ppgbench
