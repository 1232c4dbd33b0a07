#pragma once

#include <stdexcept>
#include <string>

namespace vjdet {

/// Failure classes surfaced by the library. The CLI maps these onto exit
/// codes (usage/input/internal), tests match on them.
enum class Errc {
  FileNotFound,
  UnsupportedFormat,
  CorruptHeader,
  OutOfBounds,
  FeatureOutOfWindow,
  WindowTooSmall,
  DegenerateSamples,
  EmptyValidationSet,
  InsufficientNegatives,
  ImageSmallerThanWindow,
  MalformedXml,
  MalformedJson,
  MalformedManifest,
  MissingFile,
  RectOutOfImage,
  SchemaViolation,
  UnsupportedFeatureType,
  UnsupportedTreeShape,
  InvalidConfig,
  Internal,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace vjdet
