#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fuzzlab {

enum class ErrorCode {
  UnknownField,
  ValueOutOfRange,
  ComputedFieldWrite,
  MissingField,
  TruncatedPacket,
  UnknownLayerStack,
  NotFuzzable,
  ComputedFieldInAList,
  PoolExhausted,
  InvalidPlanForScenario,
  IncompleteSession,
  MixedScenario,
  LengthMismatch,
  BadLength,
  NonZeroTail,
  BadStack,
  EmptyClass,
  ShapeMismatch,
  NonFiniteLoss,
  DegenerateDenominator,
  FeatureOutOfRange,
  NoFuzzedElements,
  WrongFamily,
  ParseError,
  SchemaVersionMismatch,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fuzzlab
