#include "bodyshape/errors.hpp"

namespace bodyshape {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidAsset: return "invalid-asset";
    case ErrorKind::MissingFile: return "missing-file";
    case ErrorKind::SchemaViolation: return "schema-violation";
    case ErrorKind::NonClosedMesh: return "non-closed-mesh";
    case ErrorKind::IncompleteAsset: return "incomplete-asset";
    case ErrorKind::UndefinedVolume: return "undefined-volume";
    case ErrorKind::InvalidRing: return "invalid-ring";
    case ErrorKind::Config: return "config";
    case ErrorKind::IncompleteBins: return "incomplete-bins";
    case ErrorKind::Lexicon: return "lexicon";
    case ErrorKind::UnparseableDescription: return "unparseable-description";
    case ErrorKind::Format: return "format";
    case ErrorKind::MalformedOutput: return "malformed-output";
    case ErrorKind::Arity: return "arity";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Input: return "input";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

Error::Error(ErrorKind kind, const std::string& message, std::size_t line)
    : std::runtime_error("line " + std::to_string(line) + ": " + message),
      kind_(kind),
      line_(line) {}

}  // namespace bodyshape
