#pragma once

#include <stdexcept>
#include <string>

namespace fmea {

// Domain error codes. Each maps to one failure mode named in a module
// contract; tests assert on the code, messages are for humans.
enum class Errc {
  // ontology
  MalformedEntry,
  DuplicateId,
  DanglingParent,
  ClassMismatch,
  UnknownParent,
  EmptyLabel,
  // ingest
  MissingColumn,
  EmptyMandatoryCell,
  EncodingError,
  // extract / llm
  LlmUnavailable,
  SchemaViolation,
  DuplicateSlots,
  IdNotInCandidates,
  ParentNotInCandidates,
  NewForbidden,
  // kg
  RowMismatch,
  UnknownConcept,
  MalformedGraphFile,
  // features
  ProviderUnavailable,
  EmptyText,
  DegenerateInput,
  DimensionMismatch,
  // model
  ShapeMismatch,
  LengthMismatch,
  NonFiniteLoss,
  NoTrainableTriples,
  // infer
  FunctionNotFound,
  NoEntitiesExtracted,
  AlignmentMismatch,
  // eval
  EmptyTruth,
  InfeasibleSpec,
  // cli
  UsageError,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace fmea
