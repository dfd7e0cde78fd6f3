#include "lsmgan/error.hpp"

namespace lsmgan {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::LengthNotDivisible: return "LengthNotDivisible";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::IndivisibleBlockCount: return "IndivisibleBlockCount";
    case ErrorCode::BlockMismatch: return "BlockMismatch";
    case ErrorCode::TooFewBlocks: return "TooFewBlocks";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::BatchMismatch: return "BatchMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::IndivisibleLength: return "IndivisibleLength";
    case ErrorCode::MissingGenerator: return "MissingGenerator";
    case ErrorCode::TargetBelowCurrent: return "TargetBelowCurrent";
    case ErrorCode::SingleClassCorpus: return "SingleClassCorpus";
    case ErrorCode::LeakageDetected: return "LeakageDetected";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace lsmgan
