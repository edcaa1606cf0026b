#include "tlrf/centered_forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tlrf/parallel.hpp"

namespace tlrf {

namespace {

struct TreeBuilder {
  const Dataset& data;
  const std::vector<double>& weights;
  Rng& rng;
  CenteredTree& tree;
  std::vector<double> lo, hi;
  std::vector<std::size_t> idx;

  void build(std::size_t node, int level, std::size_t begin, std::size_t end) {
    if (level == tree.depth) {
      const std::size_t leaf = node - (tree.leaves() - 1);
      double sum = 0.0;
      for (std::size_t p = begin; p < end; ++p) sum += data.y[idx[p]];
      const std::size_t count = end - begin;
      tree.leaf_count[leaf] = static_cast<std::uint32_t>(count);
      tree.leaf_mean[leaf] = count == 0 ? 0.0 : sum / static_cast<double>(count);
      return;
    }
    const std::size_t j = rng.discrete(weights);
    const double mid = 0.5 * (lo[j] + hi[j]);
    tree.split_feature[node] = static_cast<int>(j);
    tree.split_value[node] = mid;

    auto it = std::stable_partition(
        idx.begin() + static_cast<std::ptrdiff_t>(begin),
        idx.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t i) { return data.X(i, j) < mid; });
    const std::size_t cut = static_cast<std::size_t>(it - idx.begin());

    const double saved_hi = hi[j];
    hi[j] = mid;
    build(2 * node + 1, level + 1, begin, cut);
    hi[j] = saved_hi;

    const double saved_lo = lo[j];
    lo[j] = mid;
    build(2 * node + 2, level + 1, cut, end);
    lo[j] = saved_lo;
  }
};

}  // namespace

std::size_t CenteredTree::leaf_index(std::span<const double> x) const {
  std::size_t node = 0;
  for (int level = 0; level < depth; ++level) {
    const int j = split_feature[node];
    node = x[static_cast<std::size_t>(j)] < split_value[node] ? 2 * node + 1
                                                              : 2 * node + 2;
  }
  return node - (leaves() - 1);
}

CenteredTree build_centered_tree(const Dataset& data, const FeatureWeights& weights,
                                 int depth, Rng& rng) {
  if (data.size() == 0)
    throw std::invalid_argument("build_centered_tree: empty training set");
  if (depth < 0)
    throw std::invalid_argument("build_centered_tree: negative depth");
  if (weights.size() != data.dims())
    throw std::invalid_argument("build_centered_tree: weights/data dimension mismatch");

  CenteredTree tree;
  tree.depth = depth;
  tree.n_features = data.dims();
  const std::size_t leaves = std::size_t{1} << depth;
  tree.split_feature.assign(leaves - 1, -1);
  tree.split_value.assign(leaves - 1, 0.0);
  tree.leaf_mean.assign(leaves, 0.0);
  tree.leaf_count.assign(leaves, 0);

  TreeBuilder builder{data, weights.probs(), rng, tree,
                      std::vector<double>(data.dims(), 0.0),
                      std::vector<double>(data.dims(), 1.0),
                      std::vector<std::size_t>(data.size())};
  std::iota(builder.idx.begin(), builder.idx.end(), 0);
  builder.build(0, 0, 0, data.size());
  return tree;
}

CenteredForest::CenteredForest(std::vector<CenteredTree> trees,
                               FeatureWeights weights, int depth,
                               std::uint64_t seed)
    : trees_(std::move(trees)),
      weights_(std::move(weights)),
      depth_(depth),
      seed_(seed) {}

CenteredForest CenteredForest::fit(const Dataset& data,
                                   const FeatureWeights& weights,
                                   const CenteredForestConfig& cfg) {
  if (cfg.trees == 0)
    throw std::invalid_argument("CenteredForest: need at least one tree");
  std::vector<CenteredTree> trees(cfg.trees);
  parallel_for(cfg.trees, cfg.workers, [&](std::size_t m) {
    Rng rng(derive_stream(cfg.seed, m));
    trees[m] = build_centered_tree(data, weights, cfg.depth, rng);
  });
  return CenteredForest(std::move(trees), weights, cfg.depth, cfg.seed);
}

double CenteredForest::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> CenteredForest::predict_batch(const FeatureMatrix& X,
                                                  unsigned workers) const {
  std::vector<double> out(X.rows());
  parallel_for(X.rows(), workers, [&](std::size_t i) {
    std::vector<double> row(X.cols());
    X.row(i, row);
    out[i] = predict(row);
  });
  return out;
}

std::vector<int> cv_depth_candidates(std::size_t n) {
  std::vector<int> out;
  if (n == 0) return out;
  const double limit = std::log2(static_cast<double>(n));
  for (int h = 1; static_cast<double>(h) <= limit; h += 2) out.push_back(h);
  return out;
}

int cv_select_depth(const Dataset& data, const FeatureWeights& weights,
                    std::size_t trees, int folds, std::uint64_t seed,
                    unsigned workers) {
  const std::size_t n = data.size();
  const auto candidates = cv_depth_candidates(n);
  if (candidates.empty())
    throw std::invalid_argument("cv_select_depth: no admissible depth");
  if (candidates.size() == 1) return candidates.front();
  if (folds < 2) throw std::invalid_argument("cv_select_depth: need >= 2 folds");
  if (n < static_cast<std::size_t>(folds))
    throw std::invalid_argument("cv_select_depth: fewer samples than folds");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng shuffler(derive_stream(seed, 0));
  shuffler.shuffle(perm);

  const std::size_t k = static_cast<std::size_t>(folds);
  std::vector<std::pair<std::size_t, std::size_t>> fold_bounds(k);
  for (std::size_t f = 0; f < k; ++f)
    fold_bounds[f] = {f * n / k, (f + 1) * n / k};

  // one task per (candidate, fold) cell
  const std::size_t cells = candidates.size() * k;
  std::vector<double> cell_mse(cells, 0.0);
  parallel_for(cells, workers, [&](std::size_t cell) {
    const std::size_t ci = cell / k;
    const std::size_t f = cell % k;
    const auto [fb, fe] = fold_bounds[f];

    std::vector<std::size_t> train_idx, held_idx;
    train_idx.reserve(n - (fe - fb));
    held_idx.reserve(fe - fb);
    for (std::size_t p = 0; p < n; ++p)
      (p >= fb && p < fe ? held_idx : train_idx).push_back(perm[p]);

    const Dataset train = data.subset(train_idx);
    CenteredForestConfig cfg;
    cfg.depth = candidates[ci];
    cfg.trees = trees;
    cfg.seed = derive_stream(seed, cell + 1);
    cfg.workers = 1;  // parallelism lives at the cell level
    const CenteredForest forest = CenteredForest::fit(train, weights, cfg);

    double err = 0.0;
    std::vector<double> row(data.dims());
    for (std::size_t i : held_idx) {
      data.X.row(i, row);
      const double e = forest.predict(row) - data.y[i];
      err += e * e;
    }
    cell_mse[cell] = err / static_cast<double>(held_idx.size());
  });

  int best_depth = candidates.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    double mean = 0.0;
    for (std::size_t f = 0; f < k; ++f) mean += cell_mse[ci * k + f];
    mean /= static_cast<double>(k);
    if (mean < best_err) {
      best_err = mean;
      best_depth = candidates[ci];
    }
  }
  return best_depth;
}

}  // namespace tlrf
