#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cdid {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Design { Panel, Rcs };

const char* to_string(Design design);
Design design_from_string(const std::string& name);

// Column-name map for panel files. An empty covariate list selects every
// column not otherwise named, in file order.
struct PanelSchema {
  std::string y_pre = "y_pre";
  std::string y_post = "y_post";
  std::string dose = "dose";
  std::vector<std::string> covariates;
};

struct RcsSchema {
  std::string y = "y";
  std::string period = "period";
  std::string dose = "dose";
  std::vector<std::string> covariates;
};

// Balanced two-period panel. Immutable once constructed; the constructor
// enforces every invariant and throws DataError otherwise.
class PanelDataset {
 public:
  PanelDataset(std::vector<double> y_pre, std::vector<double> y_post, std::vector<double> dose,
               Matrix covariates, std::vector<std::string> covariate_names = {});

  std::size_t size() const noexcept { return dose_.size(); }
  std::size_t n_covariates() const noexcept { return static_cast<std::size_t>(covariates_.cols()); }

  std::span<const double> y_pre() const noexcept { return y_pre_; }
  std::span<const double> y_post() const noexcept { return y_post_; }
  std::span<const double> dose() const noexcept { return dose_; }
  const Matrix& covariates() const noexcept { return covariates_; }
  std::span<const double> covariate_row(std::size_t i) const noexcept {
    return {covariates_.data() + i * n_covariates(), n_covariates()};
  }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

  double delta_y(std::size_t i) const noexcept { return y_post_[i] - y_pre_[i]; }

  // Rows in the given order; the subset must itself satisfy the invariants.
  PanelDataset subset(std::span<const std::size_t> rows) const;

 private:
  std::vector<double> y_pre_;
  std::vector<double> y_post_;
  std::vector<double> dose_;
  Matrix covariates_;
  std::vector<std::string> names_;
};

// Repeated cross-sections: pooled outcome with a post-period indicator.
class RcsDataset {
 public:
  RcsDataset(std::vector<double> y, std::vector<int> period, std::vector<double> dose,
             Matrix covariates, std::vector<std::string> covariate_names = {});

  std::size_t size() const noexcept { return dose_.size(); }
  std::size_t n_covariates() const noexcept { return static_cast<std::size_t>(covariates_.cols()); }

  std::span<const double> y() const noexcept { return y_; }
  std::span<const int> period() const noexcept { return period_; }
  std::span<const double> dose() const noexcept { return dose_; }
  const Matrix& covariates() const noexcept { return covariates_; }
  std::span<const double> covariate_row(std::size_t i) const noexcept {
    return {covariates_.data() + i * n_covariates(), n_covariates()};
  }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

  RcsDataset subset(std::span<const std::size_t> rows) const;

 private:
  std::vector<double> y_;
  std::vector<int> period_;
  std::vector<double> dose_;
  Matrix covariates_;
  std::vector<std::string> names_;
};

PanelDataset load_panel_csv(const std::filesystem::path& path, const PanelSchema& schema = {});
RcsDataset load_rcs_csv(const std::filesystem::path& path, const RcsSchema& schema = {});

// Writes with the default schema column names and the stored covariate names.
void write_panel_csv(const std::filesystem::path& path, const PanelDataset& data);
void write_rcs_csv(const std::filesystem::path& path, const RcsDataset& data);

// Strictly increasing, strictly positive evaluation doses.
class DoseGrid {
 public:
  explicit DoseGrid(std::vector<double> points);

  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t j) const noexcept { return points_[j]; }

 private:
  std::vector<double> points_;
};

inline constexpr std::size_t kDefaultGridPoints = 25;
inline constexpr double kDefaultGridTrim = 0.05;

// Linear-interpolation sample quantile (type 7) of unsorted values.
double sample_quantile(std::vector<double> values, double prob);

// n_points equally spaced doses between the trim and 1-trim quantiles of the
// positive doses. n_points == 1 yields the midpoint of that range.
DoseGrid make_dose_grid(std::span<const double> doses, std::size_t n_points,
                        double trim = kDefaultGridTrim);
DoseGrid make_dose_grid(const PanelDataset& data, std::size_t n_points = kDefaultGridPoints,
                        double trim = kDefaultGridTrim);
DoseGrid make_dose_grid(const RcsDataset& data, std::size_t n_points = kDefaultGridPoints,
                        double trim = kDefaultGridTrim);

// User-supplied doses; every point must lie within the positive-dose support.
DoseGrid make_explicit_grid(std::vector<double> points, std::span<const double> doses);

std::vector<double> positive_doses(std::span<const double> doses);

}  // namespace cdid
