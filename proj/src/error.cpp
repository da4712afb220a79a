#include "fuzzlab/error.hpp"

namespace fuzzlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::ComputedFieldWrite: return "ComputedFieldWrite";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::TruncatedPacket: return "TruncatedPacket";
    case ErrorCode::UnknownLayerStack: return "UnknownLayerStack";
    case ErrorCode::NotFuzzable: return "NotFuzzable";
    case ErrorCode::ComputedFieldInAList: return "ComputedFieldInAList";
    case ErrorCode::PoolExhausted: return "PoolExhausted";
    case ErrorCode::InvalidPlanForScenario: return "InvalidPlanForScenario";
    case ErrorCode::IncompleteSession: return "IncompleteSession";
    case ErrorCode::MixedScenario: return "MixedScenario";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadLength: return "BadLength";
    case ErrorCode::NonZeroTail: return "NonZeroTail";
    case ErrorCode::BadStack: return "BadStack";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::FeatureOutOfRange: return "FeatureOutOfRange";
    case ErrorCode::NoFuzzedElements: return "NoFuzzedElements";
    case ErrorCode::WrongFamily: return "WrongFamily";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace fuzzlab
