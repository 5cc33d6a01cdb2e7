#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace scenecolor {

/// Failure categories surfaced by every module. The CLI and the HTTP service
/// map these onto exit codes and status codes respectively.
enum class ErrorCode {
  // geometry
  ParseError,
  EmptyMesh,
  DegenerateGeometry,
  // segmentation
  SingleClass,
  DimensionMismatch,
  RegistryMismatch,
  ComponentSetMismatch,
  // palette
  TooFewPixels,
  UnknownMaterial,
  EmptyCategory,
  SchemeMismatch,
  // scene optimizer
  InsufficientData,
  NoCandidates,
  InvalidPin,
  // datastore
  MaskOutOfBounds,
  OverlappingParts,
  UnknownScene,
  UnknownCategory,
  NotFound,
  // pipeline
  CategoryMismatch,
  MissingCategoryInExample,
  UntrainedModel,
  InvalidArgument,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RegistryMismatch: return "RegistryMismatch";
    case ErrorCode::ComponentSetMismatch: return "ComponentSetMismatch";
    case ErrorCode::TooFewPixels: return "TooFewPixels";
    case ErrorCode::UnknownMaterial: return "UnknownMaterial";
    case ErrorCode::EmptyCategory: return "EmptyCategory";
    case ErrorCode::SchemeMismatch: return "SchemeMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::InvalidPin: return "InvalidPin";
    case ErrorCode::MaskOutOfBounds: return "MaskOutOfBounds";
    case ErrorCode::OverlappingParts: return "OverlappingParts";
    case ErrorCode::UnknownScene: return "UnknownScene";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::CategoryMismatch: return "CategoryMismatch";
    case ErrorCode::MissingCategoryInExample: return "MissingCategoryInExample";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

  nlohmann::json to_json() const {
    return {{"code", std::string(to_string(code_))}, {"message", what()}, {"details", details_}};
  }

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              nlohmann::json details = nlohmann::json::object()) {
  throw Error(code, message, std::move(details));
}

}  // namespace scenecolor
