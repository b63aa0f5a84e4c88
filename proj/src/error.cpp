#include "cdid/error.hpp"

#include <utility>

namespace cdid {

const char* to_string(DataErrorKind kind) {
  switch (kind) {
    case DataErrorKind::Io: return "io";
    case DataErrorKind::MissingColumn: return "missing_column";
    case DataErrorKind::NonNumericCell: return "non_numeric_cell";
    case DataErrorKind::MissingCell: return "missing_cell";
    case DataErrorKind::RowCountMismatch: return "row_count_mismatch";
    case DataErrorKind::NegativeDose: return "negative_dose";
    case DataErrorKind::InvalidPeriod: return "invalid_period";
    case DataErrorKind::NoControlRows: return "no_control_rows";
    case DataErrorKind::NoTreatedRows: return "no_treated_rows";
    case DataErrorKind::SinglePeriod: return "single_period";
    case DataErrorKind::NonFinite: return "non_finite";
    case DataErrorKind::TooFewRows: return "too_few_rows";
    case DataErrorKind::InsufficientDoses: return "insufficient_doses";
  }
  return "unknown";
}

DataError::DataError(DataErrorKind kind, const std::string& message, std::string column,
                     std::optional<std::size_t> row)
    : std::runtime_error(message), kind_(kind), column_(std::move(column)), row_(row) {}

}  // namespace cdid
