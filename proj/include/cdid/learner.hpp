#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cdid/dataset.hpp"

namespace cdid {

enum class LearnerKind { RandomForest, Ridge, Logistic };

const char* to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& name);

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 20;
  std::size_t min_leaf = 5;
  // Candidate features per split; 0 selects max(1, floor(p / 3)).
  std::size_t mtry = 0;
};

// Learner family and hyperparameters shared by every nuisance role.
// Logistic uses penalized logistic regression for the control propensity
// and ridge for the continuous-target regressions.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::RandomForest;
  ForestParams forest;
  double ridge_penalty = 1.0;
};

std::size_t resolve_mtry(const ForestParams& params, std::size_t n_features) noexcept;

// A fitted model mapping one covariate row to a real prediction.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual double predict(std::span<const double> x) const = 0;

  std::vector<double> predict_rows(const Matrix& x) const;
};

using RegressorPtr = std::shared_ptr<const Regressor>;

// Conditional mean of a continuous target (forest or ridge).
RegressorPtr fit_regression(const Matrix& features, std::span<const double> targets,
                            const LearnerSpec& spec, std::uint64_t seed);

// Conditional probability of a 0/1 target (forest, ridge linear-probability
// model, or logistic regression). Predictions are not clipped here.
RegressorPtr fit_probability(const Matrix& features, std::span<const double> labels,
                             const LearnerSpec& spec, std::uint64_t seed);

}  // namespace cdid
