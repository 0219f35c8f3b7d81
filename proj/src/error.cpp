#include "combkit/error.hpp"

namespace combkit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DuplicateDefinition: return "DuplicateDefinition";
    case ErrorCode::EmptyAlternative: return "EmptyAlternative";
    case ErrorCode::ReservedName: return "ReservedName";
    case ErrorCode::UnresolvedReference: return "UnresolvedReference";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::IllFoundedSequence: return "IllFoundedSequence";
    case ErrorCode::NonStabilizing: return "NonStabilizing";
    case ErrorCode::NotValidated: return "NotValidated";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::ConstantTermNonzero: return "ConstantTermNonzero";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::BoundsMismatch: return "BoundsMismatch";
    case ErrorCode::Divergent: return "Divergent";
    case ErrorCode::SeqOperandAtOne: return "SeqOperandAtOne";
    case ErrorCode::ContractionFailed: return "ContractionFailed";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::InvalidPoint: return "InvalidPoint";
    case ErrorCode::EntropyExhausted: return "EntropyExhausted";
    case ErrorCode::PrecisionCeiling: return "PrecisionCeiling";
    case ErrorCode::BuilderFailure: return "BuilderFailure";
    case ErrorCode::WindowEmpty: return "WindowEmpty";
    case ErrorCode::InvalidTrace: return "InvalidTrace";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::TooFewCategories: return "TooFewCategories";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SyntaxError:
    case ErrorCode::DuplicateDefinition:
    case ErrorCode::EmptyAlternative:
    case ErrorCode::ReservedName:
    case ErrorCode::UnresolvedReference:
    case ErrorCode::EmptyClass:
    case ErrorCode::IllFoundedSequence:
    case ErrorCode::NonStabilizing:
    case ErrorCode::NotValidated:
    case ErrorCode::UnknownClass:
      return ErrorCategory::Spec;
    case ErrorCode::UnknownVariable:
    case ErrorCode::InvalidPoint:
    case ErrorCode::InvalidTrace:
      return ErrorCategory::Usage;
    default:
      return ErrorCategory::Numeric;
  }
}

Error::Error(ErrorCode code, std::string message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error::Error(ErrorCode code, std::string message, SourcePosition position)
    : std::runtime_error(std::string(to_string(code)) + " at " + position.origin + ":" +
                         std::to_string(position.line) + ":" + std::to_string(position.column) +
                         ": " + message),
      code_(code),
      position_(std::move(position)) {}

}  // namespace combkit
