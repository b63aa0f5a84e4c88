#include <algorithm>
#include <cmath>
#include <vector>

#include "cdid/error.hpp"
#include "cdid/forest.hpp"
#include "cdid/linear_models.hpp"
#include "cdid/random.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cdid;

namespace {

Matrix random_features(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = rng.normal();
  }
  return x;
}

std::span<const double> row(const Matrix& x, Eigen::Index i) {
  return {x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())};
}

ForestParams small_forest(std::size_t trees = 50) {
  ForestParams p;
  p.n_trees = trees;
  return p;
}

}  // namespace

TEST_CASE("forest on constant targets") {
  const Matrix x = random_features(40, 3, 1);
  const std::vector<double> y(40, 3.0);
  const auto f = RandomForest::fit(x, y, small_forest(), 7);
  const Matrix test = random_features(10, 3, 2);
  for (Eigen::Index i = 0; i < test.rows(); ++i) CHECK(f.predict(row(test, i)) == 3.0);
}

TEST_CASE("forest recovers a step function") {
  const Matrix x = random_features(500, 1, 3);
  std::vector<double> y(500);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = x(i, 0) > 0.0 ? 1.0 : 0.0;
  const auto f = RandomForest::fit(x, y, small_forest(100), 11);
  const Matrix test = random_features(1000, 1, 4);
  double mse = 0.0;
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    const double e = f.predict(row(test, i)) - (test(i, 0) > 0.0 ? 1.0 : 0.0);
    mse += e * e;
  }
  CHECK(mse / 1000.0 < 0.05);
}

TEST_CASE("forest is deterministic and bounded by the targets") {
  const Matrix x = random_features(200, 5, 5);
  std::vector<double> y(200);
  Rng rng(6);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = x(i, 0) * x(i, 1) + rng.normal();
  const auto a = RandomForest::fit(x, y, small_forest(), 99);
  const auto b = RandomForest::fit(x, y, small_forest(), 99);
  const auto c = RandomForest::fit(x, y, small_forest(), 100);
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const Matrix test = random_features(50, 5, 8);
  bool differs = false;
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    const double pa = a.predict(row(test, i));
    CHECK(pa == b.predict(row(test, i)));
    differs = differs || pa != c.predict(row(test, i));
    CHECK(pa >= *lo);
    CHECK(pa <= *hi);
  }
  CHECK(differs);
}

TEST_CASE("forest save and load round trip") {
  const Matrix x = random_features(100, 4, 9);
  std::vector<double> y(100);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = std::sin(x(i, 2));
  const auto f = RandomForest::fit(x, y, small_forest(20), 3);
  TempDir dir;
  f.save(dir.file("forest.bin"));
  const auto g = RandomForest::load(dir.file("forest.bin"));
  CHECK(g.n_trees() == 20);
  CHECK(g.n_features() == 4);
  for (Eigen::Index i = 0; i < x.rows(); ++i) CHECK(f.predict(row(x, i)) == g.predict(row(x, i)));
  dir.write("junk.bin", "not a forest");
  CHECK_THROWS(RandomForest::load(dir.file("junk.bin")));
}

TEST_CASE("forest input errors") {
  const Matrix empty(0, 2);
  CHECK_THROWS(RandomForest::fit(empty, std::vector<double>{}, small_forest(), 1));
  const Matrix x = random_features(5, 2, 1);
  CHECK_THROWS(RandomForest::fit(x, std::vector<double>(4, 1.0), small_forest(), 1));
}

TEST_CASE("mtry default") {
  ForestParams p;
  CHECK(resolve_mtry(p, 100) == 33);
  CHECK(resolve_mtry(p, 10) == 3);
  CHECK(resolve_mtry(p, 2) == 1);
  CHECK(resolve_mtry(p, 1) == 1);
  p.mtry = 50;
  CHECK(resolve_mtry(p, 10) == 10);
}

TEST_CASE("ridge matches the normal equations") {
  const Matrix x = random_features(60, 3, 12);
  std::vector<double> y(60);
  Rng rng(13);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = 1.5 + 2.0 * x(i, 0) - x(i, 2) + rng.normal();
  const double penalty = 2.5;
  const LinearPredictor fit = fit_ridge(x, y, penalty);

  // Standardize with population sd, centre y, solve (Z'Z + lambda I) b = Z'y.
  const Eigen::Index n = x.rows();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd z = x.rowwise() - mean;
  const Eigen::RowVectorXd sd = (z.array().square().colwise().sum() / n).sqrt();
  for (Eigen::Index c = 0; c < z.cols(); ++c) z.col(c) /= sd(c);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[i];
  const double ybar = yv.mean();
  const Eigen::MatrixXd a = z.transpose() * z + penalty * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd b = a.colPivHouseholderQr().solve(z.transpose() * (yv.array() - ybar).matrix());

  CHECK(fit.intercept() == doctest::Approx(ybar).epsilon(1e-12));
  for (Eigen::Index c = 0; c < 3; ++c) CHECK(fit.coefficients()(c) == doctest::Approx(b(c)).epsilon(1e-10));
  for (Eigen::Index i = 0; i < 5; ++i) {
    const double want = ybar + z.row(i).dot(b);
    CHECK(fit.predict(row(x, i)) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("ridge on a constant column") {
  Matrix x = random_features(30, 2, 14);
  x.col(1).setConstant(4.0);
  std::vector<double> y(30);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = x(i, 0);
  const LinearPredictor fit = fit_ridge(x, y, 1e-6);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(fit.predict(row(x, i)) == doctest::Approx(x(i, 0)).epsilon(1e-4));
}

TEST_CASE("logistic fit satisfies the penalized score equations") {
  const Matrix x = random_features(400, 2, 15);
  std::vector<double> y(400);
  Rng rng(16);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(0.3 + x(i, 0) - 0.5 * x(i, 1))));
    y[i] = rng.uniform() < p ? 1.0 : 0.0;
  }
  const double penalty = 1.0;
  const LinearPredictor fit = fit_logistic(x, y, penalty);

  // Gradient on the standardized scale: sum (y - p) = 0 for the intercept,
  // sum (y - p) z_c = penalty * b_c for each coefficient.
  const Eigen::Index n = x.rows();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd z = x.rowwise() - mean;
  const Eigen::RowVectorXd sd = (z.array().square().colwise().sum() / n).sqrt();
  for (Eigen::Index c = 0; c < z.cols(); ++c) z.col(c) /= sd(c);
  double g0 = 0.0;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = y[i] - fit.predict(row(x, i));
    g0 += r;
    g += r * z.row(i).transpose();
  }
  CHECK(std::abs(g0) < 1e-8);
  for (Eigen::Index c = 0; c < 2; ++c) {
    CHECK(g(c) == doctest::Approx(penalty * fit.coefficients()(c)).epsilon(1e-8));
  }
  CHECK(fit.coefficients()(0) > 0.0);
  CHECK(fit.coefficients()(1) < 0.0);
}

TEST_CASE("learner dispatch") {
  const Matrix x = random_features(100, 2, 17);
  std::vector<double> labels(100);
  for (Eigen::Index i = 0; i < x.rows(); ++i) labels[i] = x(i, 0) > 0.0 ? 1.0 : 0.0;
  for (auto kind : {LearnerKind::RandomForest, LearnerKind::Ridge, LearnerKind::Logistic}) {
    LearnerSpec spec;
    spec.kind = kind;
    spec.forest.n_trees = 20;
    const auto reg = fit_regression(x, labels, spec, 1);
    const auto prob = fit_probability(x, labels, spec, 1);
    CHECK(std::isfinite(reg->predict(row(x, 0))));
    if (kind == LearnerKind::Logistic) {
      const double p = prob->predict(row(x, 0));
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
    CHECK(learner_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(learner_kind_from_string("svm"), ConfigError);
}
