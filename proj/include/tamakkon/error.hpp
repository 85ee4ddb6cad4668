#pragma once

#include <stdexcept>
#include <string>

namespace tamakkon {

enum class ErrorCode {
  MissingColumn,
  NonPositiveResponse,
  UnknownCategoryKind,
  EmptyDataset,
  UnknownFeature,
  NonInjectiveMapping,
  EmptyVector,
  NonFiniteValue,
  LengthMismatch,
  NonPositiveActual,
  KTooLarge,
  NoSharedArchitectureFeatures,
  EmptyKnowledgebase,
  DegenerateDesign,
  TooFewRows,
  NonFiniteFeature,
  EmptyGrid,
  MtryOutOfRange,
  MissingFeature,
  NoTransferableFeatures,
  EmptyAuxiliaryData,
  DuplicateId,
  NotFound,
  StoreLocked,
  EmptyCatalog,
  InvalidArgument,
  IoError,
  FormatVersionMismatch,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonPositiveResponse: return "NonPositiveResponse";
    case ErrorCode::UnknownCategoryKind: return "UnknownCategoryKind";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::NonInjectiveMapping: return "NonInjectiveMapping";
    case ErrorCode::EmptyVector: return "EmptyVector";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonPositiveActual: return "NonPositiveActual";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NoSharedArchitectureFeatures: return "NoSharedArchitectureFeatures";
    case ErrorCode::EmptyKnowledgebase: return "EmptyKnowledgebase";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::MtryOutOfRange: return "MtryOutOfRange";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::NoTransferableFeatures: return "NoTransferableFeatures";
    case ErrorCode::EmptyAuxiliaryData: return "EmptyAuxiliaryData";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::StoreLocked: return "StoreLocked";
    case ErrorCode::EmptyCatalog: return "EmptyCatalog";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
  }
  return "Unknown";
}

}  // namespace tamakkon
