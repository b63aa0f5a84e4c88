#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "cdid/learner.hpp"

namespace cdid {

// Bagged CART regression trees: each tree is grown on a bootstrap resample,
// splits minimize squared error over a random subset of mtry features, and
// growth stops at max_depth, when a child would fall below min_leaf
// samples, or when the node is pure. The forest prediction is the mean of
// the tree predictions.
class RandomForest final : public Regressor {
 public:
  struct Node {
    std::int32_t feature;  // -1 for a leaf
    std::int32_t left;     // right child is left + 1
    double value;          // split threshold, or leaf mean
  };
  using Tree = std::vector<Node>;

  RandomForest(std::vector<Tree> trees, std::size_t n_features);

  static RandomForest fit(const Matrix& features, std::span<const double> targets,
                          const ForestParams& params, std::uint64_t seed);

  double predict(std::span<const double> x) const override;

  std::size_t n_trees() const noexcept { return trees_.size(); }
  std::size_t n_features() const noexcept { return n_features_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

  // Debug dump; format documented in README ("Forest dump format").
  void save(const std::filesystem::path& path) const;
  static RandomForest load(const std::filesystem::path& path);

 private:
  std::vector<Tree> trees_;
  std::size_t n_features_;
};

std::shared_ptr<const RandomForest> fit_regression_forest(const Matrix& features,
                                                          std::span<const double> targets,
                                                          const LearnerSpec& spec,
                                                          std::uint64_t seed);

}  // namespace cdid
