#include "cdid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cdid/csv.hpp"
#include "cdid/error.hpp"

namespace cdid {

namespace {

std::vector<std::string> default_names(std::size_t p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

void check_length(std::size_t expected, std::size_t actual, const std::string& column) {
  if (actual != expected) {
    throw DataError(DataErrorKind::RowCountMismatch,
                    "column '" + column + "' has " + std::to_string(actual) + " rows, expected " +
                        std::to_string(expected),
                    column);
  }
}

void check_finite(std::span<const double> values, const std::string& column) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError(DataErrorKind::NonFinite,
                      "non-finite value in column '" + column + "' at row " + std::to_string(i + 1),
                      column, i + 1);
    }
  }
}

void check_covariates(const Matrix& x, const std::vector<std::string>& names) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!std::isfinite(x(i, j))) {
        const auto& name = names[static_cast<std::size_t>(j)];
        throw DataError(DataErrorKind::NonFinite,
                        "non-finite value in column '" + name + "' at row " +
                            std::to_string(i + 1),
                        name, static_cast<std::size_t>(i) + 1);
      }
    }
  }
}

void check_doses(std::span<const double> dose, const std::string& column) {
  bool has_control = false;
  bool has_treated = false;
  for (std::size_t i = 0; i < dose.size(); ++i) {
    if (dose[i] < 0.0) {
      throw DataError(DataErrorKind::NegativeDose,
                      "negative dose in column '" + column + "' at row " + std::to_string(i + 1),
                      column, i + 1);
    }
    // Controls are exactly zero; no tolerance.
    if (dose[i] == 0.0) {
      has_control = true;
    } else {
      has_treated = true;
    }
  }
  if (!has_control) {
    throw DataError(DataErrorKind::NoControlRows, "no control rows (dose == 0)", column);
  }
  if (!has_treated) {
    throw DataError(DataErrorKind::NoTreatedRows, "no treated rows (dose > 0)", column);
  }
}

Matrix select_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

template <typename T>
std::vector<T> select(std::span<const T> values, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(values[r]);
  return out;
}

std::size_t require_column(const CsvTable& table, const std::string& name) {
  const auto j = table.column(name);
  if (!j) {
    throw DataError(DataErrorKind::MissingColumn, "missing column '" + name + "'", name);
  }
  return *j;
}

double numeric_cell(const CsvTable& table, std::size_t row, std::size_t col) {
  const auto& name = table.header[col];
  const auto& record = table.rows[row];
  if (record.size() != table.header.size()) {
    throw DataError(DataErrorKind::MissingCell,
                    "row " + std::to_string(row + 1) + " has " + std::to_string(record.size()) +
                        " fields, header has " + std::to_string(table.header.size()),
                    name, row + 1);
  }
  const std::string& cell = record[col];
  if (cell.find_first_not_of(" \t") == std::string::npos) {
    throw DataError(DataErrorKind::MissingCell,
                    "missing value in column '" + name + "' at row " + std::to_string(row + 1),
                    name, row + 1);
  }
  const auto value = parse_double(cell);
  if (!value) {
    throw DataError(DataErrorKind::NonNumericCell,
                    "non-numeric value '" + cell + "' in column '" + name + "' at row " +
                        std::to_string(row + 1),
                    name, row + 1);
  }
  return *value;
}

std::vector<double> numeric_column(const CsvTable& table, std::size_t col) {
  std::vector<double> out(table.rows.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = numeric_cell(table, i, col);
  return out;
}

struct CovariateBlock {
  Matrix values;
  std::vector<std::string> names;
};

CovariateBlock read_covariates(const CsvTable& table, const std::vector<std::string>& requested,
                               const std::set<std::string>& reserved) {
  std::vector<std::size_t> cols;
  CovariateBlock block;
  if (requested.empty()) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      if (!reserved.contains(table.header[j])) {
        cols.push_back(j);
        block.names.push_back(table.header[j]);
      }
    }
  } else {
    for (const auto& name : requested) {
      cols.push_back(require_column(table, name));
      block.names.push_back(name);
    }
  }
  block.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      block.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          numeric_cell(table, i, cols[c]);
    }
  }
  return block;
}

void check_all_rows_complete(const CsvTable& table) {
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != table.header.size()) {
      throw DataError(DataErrorKind::MissingCell,
                      "row " + std::to_string(i + 1) + " has " +
                          std::to_string(table.rows[i].size()) + " fields, header has " +
                          std::to_string(table.header.size()),
                      {}, i + 1);
    }
  }
}

void write_rows(std::ofstream& out, const std::vector<std::string>& header,
                std::size_t n, const auto& row_fields) {
  write_csv_row(out, header);
  std::vector<std::string> fields;
  for (std::size_t i = 0; i < n; ++i) {
    fields.clear();
    row_fields(i, fields);
    write_csv_row(out, fields);
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::Io, "cannot open output file: " + path.string());
  return out;
}

}  // namespace

const char* to_string(Design design) { return design == Design::Panel ? "panel" : "rcs"; }

Design design_from_string(const std::string& name) {
  if (name == "panel") return Design::Panel;
  if (name == "rcs") return Design::Rcs;
  throw ConfigError("unknown design '" + name + "' (expected panel or rcs)");
}

PanelDataset::PanelDataset(std::vector<double> y_pre, std::vector<double> y_post,
                           std::vector<double> dose, Matrix covariates,
                           std::vector<std::string> covariate_names)
    : y_pre_(std::move(y_pre)),
      y_post_(std::move(y_post)),
      dose_(std::move(dose)),
      covariates_(std::move(covariates)),
      names_(std::move(covariate_names)) {
  const std::size_t n = dose_.size();
  if (names_.empty()) names_ = default_names(n_covariates());
  if (names_.size() != n_covariates()) {
    throw DataError(DataErrorKind::RowCountMismatch, "covariate names do not match columns");
  }
  check_length(n, y_pre_.size(), "y_pre");
  check_length(n, y_post_.size(), "y_post");
  check_length(n, static_cast<std::size_t>(covariates_.rows()), "covariates");
  if (n < 2) throw DataError(DataErrorKind::TooFewRows, "a panel needs at least 2 rows");
  check_finite(y_pre_, "y_pre");
  check_finite(y_post_, "y_post");
  check_finite(dose_, "dose");
  check_covariates(covariates_, names_);
  check_doses(dose_, "dose");
}

PanelDataset PanelDataset::subset(std::span<const std::size_t> rows) const {
  return PanelDataset(select<double>(y_pre_, rows), select<double>(y_post_, rows),
                      select<double>(dose_, rows), select_rows(covariates_, rows), names_);
}

RcsDataset::RcsDataset(std::vector<double> y, std::vector<int> period, std::vector<double> dose,
                       Matrix covariates, std::vector<std::string> covariate_names)
    : y_(std::move(y)),
      period_(std::move(period)),
      dose_(std::move(dose)),
      covariates_(std::move(covariates)),
      names_(std::move(covariate_names)) {
  const std::size_t n = dose_.size();
  if (names_.empty()) names_ = default_names(n_covariates());
  if (names_.size() != n_covariates()) {
    throw DataError(DataErrorKind::RowCountMismatch, "covariate names do not match columns");
  }
  check_length(n, y_.size(), "y");
  check_length(n, period_.size(), "period");
  check_length(n, static_cast<std::size_t>(covariates_.rows()), "covariates");
  if (n < 2) throw DataError(DataErrorKind::TooFewRows, "a sample needs at least 2 rows");
  check_finite(y_, "y");
  check_finite(dose_, "dose");
  check_covariates(covariates_, names_);
  bool pre = false;
  bool post = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (period_[i] != 0 && period_[i] != 1) {
      throw DataError(DataErrorKind::InvalidPeriod,
                      "period must be 0 or 1 at row " + std::to_string(i + 1), "period", i + 1);
    }
    (period_[i] == 1 ? post : pre) = true;
  }
  if (!pre || !post) {
    throw DataError(DataErrorKind::SinglePeriod, "both periods required (period 0 and 1)",
                    "period");
  }
  check_doses(dose_, "dose");
}

RcsDataset RcsDataset::subset(std::span<const std::size_t> rows) const {
  return RcsDataset(select<double>(y_, rows), select<int>(period_, rows),
                    select<double>(dose_, rows), select_rows(covariates_, rows), names_);
}

PanelDataset load_panel_csv(const std::filesystem::path& path, const PanelSchema& schema) {
  const CsvTable table = read_csv(path);
  const std::size_t c_pre = require_column(table, schema.y_pre);
  const std::size_t c_post = require_column(table, schema.y_post);
  const std::size_t c_dose = require_column(table, schema.dose);
  check_all_rows_complete(table);
  auto y_pre = numeric_column(table, c_pre);
  auto y_post = numeric_column(table, c_post);
  auto dose = numeric_column(table, c_dose);
  auto cov = read_covariates(table, schema.covariates, {schema.y_pre, schema.y_post, schema.dose});
  return PanelDataset(std::move(y_pre), std::move(y_post), std::move(dose),
                      std::move(cov.values), std::move(cov.names));
}

RcsDataset load_rcs_csv(const std::filesystem::path& path, const RcsSchema& schema) {
  const CsvTable table = read_csv(path);
  const std::size_t c_y = require_column(table, schema.y);
  const std::size_t c_t = require_column(table, schema.period);
  const std::size_t c_dose = require_column(table, schema.dose);
  check_all_rows_complete(table);
  auto y = numeric_column(table, c_y);
  const auto period_raw = numeric_column(table, c_t);
  std::vector<int> period(period_raw.size());
  for (std::size_t i = 0; i < period_raw.size(); ++i) {
    if (period_raw[i] != 0.0 && period_raw[i] != 1.0) {
      throw DataError(DataErrorKind::InvalidPeriod,
                      "period column '" + schema.period + "' must be 0 or 1 at row " +
                          std::to_string(i + 1),
                      schema.period, i + 1);
    }
    period[i] = period_raw[i] == 1.0 ? 1 : 0;
  }
  auto dose = numeric_column(table, c_dose);
  auto cov = read_covariates(table, schema.covariates, {schema.y, schema.period, schema.dose});
  return RcsDataset(std::move(y), std::move(period), std::move(dose), std::move(cov.values),
                    std::move(cov.names));
}

void write_panel_csv(const std::filesystem::path& path, const PanelDataset& data) {
  auto out = open_output(path);
  std::vector<std::string> header{"y_pre", "y_post", "dose"};
  header.insert(header.end(), data.covariate_names().begin(), data.covariate_names().end());
  write_rows(out, header, data.size(), [&](std::size_t i, std::vector<std::string>& f) {
    f.push_back(format_double(data.y_pre()[i]));
    f.push_back(format_double(data.y_post()[i]));
    f.push_back(format_double(data.dose()[i]));
    for (double x : data.covariate_row(i)) f.push_back(format_double(x));
  });
}

void write_rcs_csv(const std::filesystem::path& path, const RcsDataset& data) {
  auto out = open_output(path);
  std::vector<std::string> header{"y", "period", "dose"};
  header.insert(header.end(), data.covariate_names().begin(), data.covariate_names().end());
  write_rows(out, header, data.size(), [&](std::size_t i, std::vector<std::string>& f) {
    f.push_back(format_double(data.y()[i]));
    f.push_back(std::to_string(data.period()[i]));
    f.push_back(format_double(data.dose()[i]));
    for (double x : data.covariate_row(i)) f.push_back(format_double(x));
  });
}

DoseGrid::DoseGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw ConfigError("dose grid must contain at least one point");
  for (std::size_t j = 0; j < points_.size(); ++j) {
    if (!std::isfinite(points_[j]) || points_[j] <= 0.0) {
      throw ConfigError("dose grid points must be finite and strictly positive");
    }
    if (j > 0 && points_[j] <= points_[j - 1]) {
      throw ConfigError("dose grid points must be strictly increasing");
    }
  }
}

std::vector<double> positive_doses(std::span<const double> doses) {
  std::vector<double> out;
  for (double d : doses) {
    if (d > 0.0) out.push_back(d);
  }
  return out;
}

double sample_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw NumericError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

DoseGrid make_dose_grid(std::span<const double> doses, std::size_t n_points, double trim) {
  if (n_points == 0) throw ConfigError("grid needs at least one point");
  if (!(trim >= 0.0 && trim < 0.5)) {
    throw ConfigError("trim must lie in [0, 0.5); the trimmed dose range would be empty");
  }
  auto positive = positive_doses(doses);
  std::sort(positive.begin(), positive.end());
  const auto distinct = std::unique(positive.begin(), positive.end()) - positive.begin();
  if (distinct < 2) {
    throw DataError(DataErrorKind::InsufficientDoses,
                    "at least 2 distinct positive doses are needed to build a grid");
  }
  positive = positive_doses(doses);
  const double lo = sample_quantile(positive, trim);
  const double hi = sample_quantile(positive, 1.0 - trim);
  if (n_points == 1) return DoseGrid({0.5 * (lo + hi)});
  if (!(hi > lo)) {
    throw DataError(DataErrorKind::InsufficientDoses,
                    "trimmed dose range is degenerate; lower trim or add dose variation");
  }
  std::vector<double> points(n_points);
  const double step = (hi - lo) / static_cast<double>(n_points - 1);
  for (std::size_t j = 0; j < n_points; ++j) points[j] = lo + step * static_cast<double>(j);
  points.back() = hi;
  return DoseGrid(std::move(points));
}

DoseGrid make_dose_grid(const PanelDataset& data, std::size_t n_points, double trim) {
  return make_dose_grid(data.dose(), n_points, trim);
}

DoseGrid make_dose_grid(const RcsDataset& data, std::size_t n_points, double trim) {
  return make_dose_grid(data.dose(), n_points, trim);
}

DoseGrid make_explicit_grid(std::vector<double> points, std::span<const double> doses) {
  DoseGrid grid(std::move(points));
  const auto positive = positive_doses(doses);
  if (positive.empty()) {
    throw DataError(DataErrorKind::NoTreatedRows, "no treated rows to support the dose grid");
  }
  const auto [mn, mx] = std::minmax_element(positive.begin(), positive.end());
  for (double d : grid.points()) {
    if (d < *mn || d > *mx) {
      std::ostringstream msg;
      msg << "dose " << d << " lies outside the observed positive-dose support [" << *mn << ", "
          << *mx << "]";
      throw ConfigError(msg.str());
    }
  }
  return grid;
}

}  // namespace cdid
