#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace combkit {

enum class ErrorCode {
  // grammar
  SyntaxError,
  DuplicateDefinition,
  EmptyAlternative,
  ReservedName,
  // system
  UnresolvedReference,
  EmptyClass,
  IllFoundedSequence,
  NonStabilizing,
  NotValidated,
  UnknownClass,
  UnknownVariable,
  // series
  ConstantTermNonzero,
  NonConvergence,
  BoundsMismatch,
  // oracle
  Divergent,
  SeqOperandAtOne,
  ContractionFailed,
  SingularJacobian,
  InvalidPoint,
  // sampler
  EntropyExhausted,
  PrecisionCeiling,
  BuilderFailure,
  WindowEmpty,
  InvalidTrace,
  // tuner
  Infeasible,
  NoConvergence,
  // harness
  TooFewCategories,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Broad classes used for CLI exit codes.
enum class ErrorCategory { Spec, Numeric, Usage };
ErrorCategory category_of(ErrorCode code) noexcept;

struct SourcePosition {
  std::string origin;
  std::size_t line = 0;
  std::size_t column = 0;
};

/// The single exception type thrown by the library. `code` identifies the
/// failure; `position` is set for parse diagnostics, `node` when the failure
/// is attributable to a specification node.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message);
  Error(ErrorCode code, std::string message, SourcePosition position);

  ErrorCode code() const noexcept { return code_; }
  const std::optional<SourcePosition>& position() const noexcept { return position_; }
  std::optional<std::int32_t> node() const noexcept { return node_; }
  Error& with_node(std::int32_t id) {
    node_ = id;
    return *this;
  }

 private:
  ErrorCode code_;
  std::optional<SourcePosition> position_;
  std::optional<std::int32_t> node_;
};

}  // namespace combkit
