#pragma once

#include <Eigen/Dense>

#include <span>

#include "cdid/learner.hpp"

namespace cdid {

// Linear model on standardized covariates: intercept + (x - mean) / scale . beta.
class LinearPredictor : public Regressor {
 public:
  enum class Link { Identity, Logit };

  LinearPredictor(double intercept, Eigen::VectorXd coef, Eigen::VectorXd center,
                  Eigen::VectorXd scale, Link link);

  double predict(std::span<const double> x) const override;

  double intercept() const noexcept { return intercept_; }
  const Eigen::VectorXd& coefficients() const noexcept { return coef_; }

 private:
  double intercept_;
  Eigen::VectorXd coef_;
  Eigen::VectorXd center_;
  Eigen::VectorXd scale_;
  Link link_;
};

// Minimizes sum (y - a - z'b)^2 + penalty * |b|^2 on standardized z.
LinearPredictor fit_ridge(const Matrix& features, std::span<const double> targets, double penalty);

// Penalized logistic regression by Newton-Raphson; intercept unpenalized.
LinearPredictor fit_logistic(const Matrix& features, std::span<const double> labels,
                             double penalty);

}  // namespace cdid
