#include "cdid/learner.hpp"

#include "cdid/error.hpp"
#include "cdid/forest.hpp"
#include "cdid/linear_models.hpp"

namespace cdid {

const char* to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::RandomForest: return "random_forest";
    case LearnerKind::Ridge: return "ridge";
    case LearnerKind::Logistic: return "logistic";
  }
  return "unknown";
}

LearnerKind learner_kind_from_string(const std::string& name) {
  if (name == "random_forest" || name == "rf" || name == "forest") return LearnerKind::RandomForest;
  if (name == "ridge") return LearnerKind::Ridge;
  if (name == "logistic") return LearnerKind::Logistic;
  throw ConfigError("unknown learner '" + name + "' (expected random_forest, ridge or logistic)");
}

std::vector<double> Regressor::predict_rows(const Matrix& x) const {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  const auto p = static_cast<std::size_t>(x.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict({x.data() + i * p, p});
  return out;
}

RegressorPtr fit_regression(const Matrix& features, std::span<const double> targets,
                            const LearnerSpec& spec, std::uint64_t seed) {
  if (features.rows() == 0) throw NumericError("cannot fit a learner on an empty training set");
  switch (spec.kind) {
    case LearnerKind::RandomForest:
      return fit_regression_forest(features, targets, spec, seed);
    case LearnerKind::Ridge:
    case LearnerKind::Logistic:
      return std::make_shared<const LinearPredictor>(
          fit_ridge(features, targets, spec.ridge_penalty));
  }
  throw ConfigError("unsupported learner");
}

RegressorPtr fit_probability(const Matrix& features, std::span<const double> labels,
                             const LearnerSpec& spec, std::uint64_t seed) {
  if (spec.kind == LearnerKind::Logistic) {
    return std::make_shared<const LinearPredictor>(
        fit_logistic(features, labels, spec.ridge_penalty));
  }
  return fit_regression(features, labels, spec, seed);
}

}  // namespace cdid
