#include "cdid/linear_models.hpp"

#include <cmath>

#include "cdid/error.hpp"

namespace cdid {

namespace {

struct Standardized {
  Eigen::MatrixXd z;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
};

Standardized standardize(const Matrix& x) {
  Standardized s;
  const auto n = static_cast<double>(x.rows());
  s.center = x.colwise().mean().transpose();
  s.z = x.rowwise() - s.center.transpose();
  s.scale = (s.z.array().square().colwise().sum() / n).sqrt().transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  }
  s.z = s.z.array().rowwise() / s.scale.transpose().array();
  return s;
}

}  // namespace

LinearPredictor::LinearPredictor(double intercept, Eigen::VectorXd coef, Eigen::VectorXd center,
                                 Eigen::VectorXd scale, Link link)
    : intercept_(intercept),
      coef_(std::move(coef)),
      center_(std::move(center)),
      scale_(std::move(scale)),
      link_(link) {}

double LinearPredictor::predict(std::span<const double> x) const {
  double eta = intercept_;
  for (Eigen::Index j = 0; j < coef_.size(); ++j) {
    eta += coef_(j) * (x[static_cast<std::size_t>(j)] - center_(j)) / scale_(j);
  }
  if (link_ == Link::Identity) return eta;
  return 1.0 / (1.0 + std::exp(-eta));
}

LinearPredictor fit_ridge(const Matrix& features, std::span<const double> targets,
                          double penalty) {
  if (features.rows() == 0) throw NumericError("cannot fit ridge on an empty training set");
  if (!(penalty > 0.0)) throw ConfigError("ridge penalty must be positive");
  const Standardized s = standardize(features);
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), static_cast<Eigen::Index>(targets.size()));
  const double mean_y = y.mean();
  const auto p = s.z.cols();
  Eigen::MatrixXd gram = s.z.transpose() * s.z;
  gram.diagonal().array() += penalty;
  const Eigen::VectorXd rhs = s.z.transpose() * (y.array() - mean_y).matrix();
  Eigen::VectorXd beta = p > 0 ? Eigen::VectorXd(gram.ldlt().solve(rhs)) : Eigen::VectorXd();
  return LinearPredictor(mean_y, std::move(beta), s.center, s.scale,
                         LinearPredictor::Link::Identity);
}

LinearPredictor fit_logistic(const Matrix& features, std::span<const double> labels,
                             double penalty) {
  const auto n = features.rows();
  if (n == 0) throw NumericError("cannot fit logistic regression on an empty training set");
  if (!(penalty > 0.0)) throw ConfigError("logistic penalty must be positive");
  const Eigen::Map<const Eigen::VectorXd> y(labels.data(), static_cast<Eigen::Index>(labels.size()));
  const double mean_y = y.mean();
  if (mean_y <= 0.0 || mean_y >= 1.0) {
    throw NumericError("logistic regression needs both classes in the training set");
  }
  const Standardized s = standardize(features);
  const auto p = s.z.cols();
  // Design with a leading intercept column.
  Eigen::MatrixXd a(n, p + 1);
  a.col(0).setOnes();
  a.rightCols(p) = s.z;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(p + 1);
  w(0) = std::log(mean_y / (1.0 - mean_y));
  Eigen::VectorXd ridge = Eigen::VectorXd::Constant(p + 1, penalty);
  ridge(0) = 0.0;

  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = a * w;
    const Eigen::ArrayXd mu = 1.0 / (1.0 + (-eta.array()).exp());
    const Eigen::ArrayXd weight = (mu * (1.0 - mu)).max(1e-12);
    const Eigen::VectorXd grad = a.transpose() * (y.array() - mu).matrix() -
                                 (ridge.array() * w.array()).matrix();
    Eigen::MatrixXd hessian = a.transpose() * (a.array().colwise() * weight).matrix();
    hessian.diagonal() += ridge;
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);
    w += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  if (!w.allFinite()) throw NumericError("logistic regression diverged");
  return LinearPredictor(w(0), w.tail(p), s.center, s.scale, LinearPredictor::Link::Logit);
}

}  // namespace cdid
