#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bodyshape {

enum class ErrorKind {
  InvalidAsset,
  MissingFile,
  SchemaViolation,
  NonClosedMesh,
  IncompleteAsset,
  UndefinedVolume,
  InvalidRing,
  Config,
  IncompleteBins,
  Lexicon,
  UnparseableDescription,
  Format,
  MalformedOutput,
  Arity,
  OutOfRange,
  Numerical,
  Input,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure surfaced by the library is an Error with a kind that callers
// (CLI exit codes, HTTP status mapping, report counters) can switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  Error(ErrorKind kind, const std::string& message, std::size_t line);

  ErrorKind kind() const noexcept { return kind_; }
  // 1-based line number for errors raised while reading line-oriented files.
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

}  // namespace bodyshape
