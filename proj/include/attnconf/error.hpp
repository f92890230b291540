#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace attnconf {

enum class ErrorKind {
  EmptyMatrix,
  NonFinite,
  InvalidBeta,
  ParseError,
  DimensionMismatch,
  InvalidWeight,
  RowSumViolation,
  DuplicateId,
  ScoreOutOfRange,
  InvalidFraction,
  IdMismatch,
  UnmatchedId,
  NoComparablePairs,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InvalidBeta: return "InvalidBeta";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidWeight: return "InvalidWeight";
    case ErrorKind::RowSumViolation: return "RowSumViolation";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorKind::InvalidFraction: return "InvalidFraction";
    case ErrorKind::IdMismatch: return "IdMismatch";
    case ErrorKind::UnmatchedId: return "UnmatchedId";
    case ErrorKind::NoComparablePairs: return "NoComparablePairs";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library. Carries the offending record id and
/// the 1-based input line number when they are known.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::string> id = std::nullopt,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(compose(kind, message, id, line)),
        kind_(kind),
        message_(message),
        id_(std::move(id)),
        line_(line) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::optional<std::string>& id() const noexcept { return id_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

  Error with_context(std::optional<std::string> id, std::optional<std::size_t> line) const {
    return Error(kind_, message_, id_ ? id_ : std::move(id), line_ ? line_ : line);
  }

 private:
  static std::string compose(ErrorKind kind, const std::string& message,
                             const std::optional<std::string>& id,
                             const std::optional<std::size_t>& line) {
    std::string out(to_string(kind));
    if (line) out += " (line " + std::to_string(*line) + ")";
    if (id) out += " [id " + *id + "]";
    out += ": ";
    out += message;
    return out;
  }

  ErrorKind kind_;
  std::string message_;
  std::optional<std::string> id_;
  std::optional<std::size_t> line_;
};

}  // namespace attnconf
