#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace cdid {

// Invalid options or configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataErrorKind {
  Io,
  MissingColumn,
  NonNumericCell,
  MissingCell,
  RowCountMismatch,
  NegativeDose,
  InvalidPeriod,
  NoControlRows,
  NoTreatedRows,
  SinglePeriod,
  NonFinite,
  TooFewRows,
  InsufficientDoses,
};

const char* to_string(DataErrorKind kind);

// Dataset loading / validation failure (CLI exit code 3). Carries the
// offending column and 1-based data row when they are known.
class DataError : public std::runtime_error {
 public:
  DataError(DataErrorKind kind, const std::string& message, std::string column = {},
            std::optional<std::size_t> row = std::nullopt);

  DataErrorKind kind() const noexcept { return kind_; }
  const std::string& column() const noexcept { return column_; }
  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  DataErrorKind kind_;
  std::string column_;
  std::optional<std::size_t> row_;
};

// Non-finite intermediate or degenerate numerical state (CLI exit code 4).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cdid
