#include "cdid/forest.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include "cdid/error.hpp"
#include "cdid/parallel.hpp"
#include "cdid/random.hpp"

namespace cdid {

namespace {

constexpr char kDumpMagic[8] = {'C', 'D', 'I', 'D', 'R', 'F', 'S', 'T'};
constexpr std::uint32_t kDumpVersion = 1;

// Every feature's row order, sorted once per forest and shared by the trees.
struct SortedColumns {
  std::vector<std::uint32_t> order;  // [j * n + k]: k-th row by feature j
};

SortedColumns sort_columns(std::span<const double> columns, std::size_t n, std::size_t p) {
  SortedColumns out{std::vector<std::uint32_t>(n * p)};
  parallel_for(p, [&](std::size_t j) {
    auto* first = out.order.data() + j * n;
    std::iota(first, first + n, std::uint32_t{0});
    const double* col = columns.data() + j * n;
    std::stable_sort(first, first + n, [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  });
  return out;
}

// Grows one tree on a bootstrap resample. In-bag rows are kept once with
// their multiplicity as weight; each node owns the same index range in
// every feature's sorted list, so split search is a linear scan and a split
// is applied by a stable partition of each list.
class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> columns, const SortedColumns& sorted,
              std::span<const double> targets, std::size_t n, std::size_t p,
              const ForestParams& params, std::size_t mtry, std::uint64_t seed)
      : columns_(columns),
        sorted_(sorted),
        targets_(targets),
        n_(n),
        p_(p),
        params_(params),
        mtry_(mtry),
        rng_(seed),
        features_(p),
        weight_(n, 0),
        goes_left_(n, 0) {
    std::iota(features_.begin(), features_.end(), std::uint32_t{0});
  }

  RandomForest::Tree grow() {
    for (std::size_t k = 0; k < n_; ++k) ++weight_[rng_.below(n_)];
    std::size_t distinct = 0;
    for (auto w : weight_) distinct += w > 0;
    lists_.resize(distinct * p_);
    scratch_.resize(distinct);
    for (std::size_t j = 0; j < p_; ++j) {
      const std::uint32_t* order = sorted_.order.data() + j * n_;
      std::uint32_t* out = lists_.data() + j * distinct;
      for (std::size_t k = 0; k < n_; ++k) {
        if (weight_[order[k]] > 0) *out++ = order[k];
      }
    }
    stride_ = distinct;

    RandomForest::Tree tree;
    tree.push_back({-1, 0, 0.0});
    struct Task {
      std::size_t node, begin, end, depth;
    };
    std::vector<Task> stack{{0, 0, distinct, 0}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      const auto split = find_split(task.begin, task.end, task.depth);
      if (!split.found) {
        tree[task.node] = {-1, 0, split.leaf_value};
        continue;
      }
      const std::size_t middle = apply_split(task.begin, task.end, split);
      const auto left = static_cast<std::int32_t>(tree.size());
      tree[task.node] = {static_cast<std::int32_t>(split.feature), left, split.threshold};
      tree.push_back({-1, 0, 0.0});
      tree.push_back({-1, 0, 0.0});
      stack.push_back({static_cast<std::size_t>(left) + 1, middle, task.end, task.depth + 1});
      stack.push_back({static_cast<std::size_t>(left), task.begin, middle, task.depth + 1});
    }
    return tree;
  }

 private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double leaf_value = 0.0;
  };

  std::span<const double> column(std::size_t j) const { return columns_.subspan(j * n_, n_); }
  std::uint32_t* list(std::size_t j) { return lists_.data() + j * stride_; }

  Split find_split(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::uint32_t* rows = list(0);
    double sum = 0.0;
    std::size_t count = 0;
    double lo = targets_[rows[begin]];
    double hi = lo;
    for (std::size_t k = begin; k < end; ++k) {
      const double y = targets_[rows[k]];
      const std::uint32_t w = weight_[rows[k]];
      sum += w * y;
      count += w;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    Split best;
    best.leaf_value = sum / static_cast<double>(count);
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_leaf, 1);
    if (depth >= params_.max_depth || count < 2 * min_leaf || lo == hi) return best;

    double best_score = -1.0;
    std::size_t informative = 0;
    // Keep drawing features until mtry non-constant ones were inspected.
    for (std::size_t k = 0; k < p_ && informative < mtry_; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng_.below(p_ - k));
      std::swap(features_[k], features_[pick]);
      const std::size_t feature = features_[k];
      const std::span<const double> col = column(feature);
      const std::uint32_t* sorted = list(feature);
      if (col[sorted[begin]] == col[sorted[end - 1]]) continue;
      ++informative;

      double left_sum = 0.0;
      std::size_t n_left = 0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        const std::uint32_t row = sorted[i];
        const std::uint32_t w = weight_[row];
        left_sum += w * targets_[row];
        n_left += w;
        if (n_left < min_leaf) continue;
        if (count - n_left < min_leaf) break;
        const double x = col[row];
        const double next = col[sorted[i + 1]];
        if (!(x < next)) continue;
        const double right_sum = sum - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(n_left) +
                             right_sum * right_sum / static_cast<double>(count - n_left);
        if (score > best_score) {
          best_score = score;
          best.found = true;
          best.feature = feature;
          double threshold = 0.5 * (x + next);
          if (!(threshold < next)) threshold = x;
          best.threshold = threshold;
        }
      }
    }
    return best;
  }

  // Stable partition of every feature list; returns the boundary index.
  std::size_t apply_split(std::size_t begin, std::size_t end, const Split& split) {
    const std::span<const double> col = column(split.feature);
    const std::uint32_t* by_split = list(split.feature);
    std::size_t n_left = 0;
    for (std::size_t k = begin; k < end; ++k) {
      const bool left = col[by_split[k]] <= split.threshold;
      goes_left_[by_split[k]] = left;
      n_left += left;
    }
    for (std::size_t j = 0; j < p_; ++j) {
      std::uint32_t* rows = list(j);
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::uint32_t row = rows[k];
        if (goes_left_[row]) rows[l++] = row;
        else scratch_[r++] = row;
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r), rows + l);
    }
    return begin + n_left;
  }

  std::span<const double> columns_;
  const SortedColumns& sorted_;
  std::span<const double> targets_;
  std::size_t n_;
  std::size_t p_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<std::uint32_t> features_;
  std::vector<std::uint32_t> weight_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<std::uint32_t> lists_;
  std::vector<std::uint32_t> scratch_;
  std::size_t stride_ = 0;
};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError(DataErrorKind::Io, "truncated forest dump");
  return value;
}

}  // namespace

std::size_t resolve_mtry(const ForestParams& params, std::size_t n_features) noexcept {
  if (n_features == 0) return 0;
  if (params.mtry != 0) return std::min(params.mtry, n_features);
  return std::max<std::size_t>(1, n_features / 3);
}

RandomForest::RandomForest(std::vector<Tree> trees, std::size_t n_features)
    : trees_(std::move(trees)), n_features_(n_features) {}

RandomForest RandomForest::fit(const Matrix& features, std::span<const double> targets,
                               const ForestParams& params, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(features.rows());
  const auto p = static_cast<std::size_t>(features.cols());
  if (n == 0) throw NumericError("cannot fit a forest on an empty training set");
  if (targets.size() != n) throw NumericError("forest features and targets differ in length");
  if (params.n_trees == 0) throw ConfigError("forest needs at least one tree");

  // Column-major copy so split search scans one feature contiguously.
  std::vector<double> columns(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      columns[j * n + i] = features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  const std::size_t mtry = resolve_mtry(params, p);
  const SortedColumns sorted = sort_columns(columns, n, p);
  std::vector<Tree> trees(params.n_trees);
  parallel_for(params.n_trees, [&](std::size_t t) {
    TreeBuilder builder(columns, sorted, targets, n, p, params, mtry, derive_seed(seed, {t}));
    trees[t] = builder.grow();
  });
  return RandomForest(std::move(trees), p);
}

double RandomForest::predict(std::span<const double> x) const {
  double total = 0.0;
  for (const Tree& tree : trees_) {
    std::size_t node = 0;
    while (tree[node].feature >= 0) {
      const Node& split = tree[node];
      node = static_cast<std::size_t>(split.left) +
             (x[static_cast<std::size_t>(split.feature)] <= split.value ? 0 : 1);
    }
    total += tree[node].value;
  }
  return total / static_cast<double>(trees_.size());
}

void RandomForest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::Io, "cannot open output file: " + path.string());
  out.write(kDumpMagic, sizeof kDumpMagic);
  write_pod(out, kDumpVersion);
  write_pod(out, static_cast<std::uint64_t>(n_features_));
  write_pod(out, static_cast<std::uint64_t>(trees_.size()));
  for (const Tree& tree : trees_) {
    write_pod(out, static_cast<std::uint64_t>(tree.size()));
    for (const Node& node : tree) {
      write_pod(out, node.feature);
      write_pod(out, node.left);
      write_pod(out, node.value);
    }
  }
}

RandomForest RandomForest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::Io, "cannot open forest dump: " + path.string());
  char magic[sizeof kDumpMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kDumpMagic, sizeof magic) != 0) {
    throw DataError(DataErrorKind::Io, "not a forest dump: " + path.string());
  }
  if (read_pod<std::uint32_t>(in) != kDumpVersion) {
    throw DataError(DataErrorKind::Io, "unsupported forest dump version");
  }
  const auto p = read_pod<std::uint64_t>(in);
  const auto n_trees = read_pod<std::uint64_t>(in);
  std::vector<Tree> trees(n_trees);
  for (Tree& tree : trees) {
    tree.resize(read_pod<std::uint64_t>(in));
    for (Node& node : tree) {
      node.feature = read_pod<std::int32_t>(in);
      node.left = read_pod<std::int32_t>(in);
      node.value = read_pod<double>(in);
    }
  }
  return RandomForest(std::move(trees), p);
}

std::shared_ptr<const RandomForest> fit_regression_forest(const Matrix& features,
                                                          std::span<const double> targets,
                                                          const LearnerSpec& spec,
                                                          std::uint64_t seed) {
  return std::make_shared<const RandomForest>(
      RandomForest::fit(features, targets, spec.forest, seed));
}

}  // namespace cdid
