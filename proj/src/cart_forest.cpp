#include "tlrf/cart_forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tlrf/parallel.hpp"

namespace tlrf {

std::vector<std::size_t> weighted_subset(std::size_t d, std::size_t m,
                                         const FeatureWeights& weights, Rng& rng) {
  if (m == 0 || m > d)
    throw std::invalid_argument("weighted_subset: m must lie in [1, d]");
  if (weights.size() != d)
    throw std::invalid_argument("weighted_subset: weight dimension mismatch");

  std::vector<std::size_t> remaining(d);
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<double> w(weights.probs());

  std::vector<std::size_t> picked;
  picked.reserve(m);
  while (picked.size() < m) {
    double total = 0.0;
    for (std::size_t r : remaining) total += w[r];
    std::size_t pos;
    if (total > 0.0) {
      std::vector<double> active(remaining.size());
      for (std::size_t k = 0; k < remaining.size(); ++k) active[k] = w[remaining[k]];
      pos = rng.discrete(active);
    } else {
      pos = static_cast<std::size_t>(rng.next_below(remaining.size()));
    }
    picked.push_back(remaining[pos]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::optional<SplitCandidate> best_split(const Dataset& data,
                                         std::span<const std::size_t> samples,
                                         std::span<const std::size_t> features) {
  const std::size_t n = samples.size();
  if (n < 2) return std::nullopt;

  // pure node: nothing to gain
  bool pure = true;
  for (std::size_t p = 1; p < n && pure; ++p)
    pure = data.y[samples[p]] == data.y[samples[0]];
  if (pure) return std::nullopt;

  std::optional<SplitCandidate> best;
  double best_total = std::numeric_limits<double>::infinity();

  std::vector<std::pair<double, double>> xy(n);  // (feature value, response)
  for (std::size_t f : features) {
    for (std::size_t p = 0; p < n; ++p)
      xy[p] = {data.X(samples[p], f), data.y[samples[p]]};
    std::stable_sort(xy.begin(), xy.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    double total_sum = 0.0, total_sq = 0.0;
    for (const auto& [xv, yv] : xy) {
      total_sum += yv;
      total_sq += yv * yv;
    }

    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      left_sum += xy[p].second;
      left_sq += xy[p].second * xy[p].second;
      if (xy[p].first == xy[p + 1].first) continue;  // no room for a threshold

      const double nl = static_cast<double>(p + 1);
      const double nr = static_cast<double>(n - p - 1);
      const double right_sum = total_sum - left_sum;
      const double right_sq = total_sq - left_sq;
      const double sse_l = std::max(left_sq - left_sum * left_sum / nl, 0.0);
      const double sse_r = std::max(right_sq - right_sum * right_sum / nr, 0.0);
      const double total = sse_l + sse_r;
      if (total < best_total) {
        best_total = total;
        best = SplitCandidate{f, 0.5 * (xy[p].first + xy[p + 1].first), sse_l, sse_r};
      }
    }
  }
  return best;
}

namespace {

struct CartBuilder {
  const Dataset& data;
  const FeatureWeights& weights;
  const CartConfig& cfg;
  std::size_t tree_id;
  Rng& rng;
  CartTree& tree;
  std::vector<std::size_t> idx;
  bool observe;

  int add_node() {
    tree.feature.push_back(-1);
    tree.threshold.push_back(0.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.value.push_back(0.0);
    tree.count.push_back(0);
    return static_cast<int>(tree.nodes()) - 1;
  }

  void make_leaf(int node, std::size_t begin, std::size_t end) {
    double sum = 0.0;
    for (std::size_t p = begin; p < end; ++p) sum += data.y[idx[p]];
    const std::size_t c = end - begin;
    tree.value[static_cast<std::size_t>(node)] =
        c == 0 ? 0.0 : sum / static_cast<double>(c);
    tree.count[static_cast<std::size_t>(node)] = static_cast<std::uint32_t>(c);
  }

  int build(int depth, std::size_t begin, std::size_t end) {
    const int node = add_node();
    const std::size_t n = end - begin;
    if (n < 2 || (cfg.max_depth >= 0 && depth >= cfg.max_depth)) {
      make_leaf(node, begin, end);
      return node;
    }

    const std::size_t d = data.dims();
    const std::size_t m = cfg.mtry == 0
                              ? static_cast<std::size_t>(std::sqrt(static_cast<double>(d)))
                              : std::min(cfg.mtry, d);
    const auto subset = weighted_subset(d, std::max<std::size_t>(m, 1), weights, rng);
    const auto split = best_split(
        data, std::span<const std::size_t>(idx).subspan(begin, n), subset);
    if (!split) {
      make_leaf(node, begin, end);
      return node;
    }
    if (observe && cfg.observer && *cfg.observer)
      (*cfg.observer)(tree_id, subset, *split);

    const std::size_t j = split->feature;
    const double thr = split->threshold;
    auto it = std::stable_partition(
        idx.begin() + static_cast<std::ptrdiff_t>(begin),
        idx.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t i) { return data.X(i, j) < thr; });
    const std::size_t cut = static_cast<std::size_t>(it - idx.begin());

    tree.feature[static_cast<std::size_t>(node)] = static_cast<int>(j);
    tree.threshold[static_cast<std::size_t>(node)] = thr;
    tree.count[static_cast<std::size_t>(node)] = static_cast<std::uint32_t>(n);
    const int l = build(depth + 1, begin, cut);
    const int r = build(depth + 1, cut, end);
    tree.left[static_cast<std::size_t>(node)] = l;
    tree.right[static_cast<std::size_t>(node)] = r;
    return node;
  }
};

}  // namespace

double CartTree::predict(std::span<const double> x) const {
  std::size_t node = 0;
  while (feature[node] >= 0) {
    const std::size_t j = static_cast<std::size_t>(feature[node]);
    node = static_cast<std::size_t>(x[j] < threshold[node] ? left[node]
                                                           : right[node]);
  }
  return value[node];
}

CartForest::CartForest(std::vector<CartTree> trees, FeatureWeights weights,
                       CartConfig cfg, std::size_t dims)
    : trees_(std::move(trees)),
      weights_(std::move(weights)),
      cfg_(std::move(cfg)),
      dims_(dims) {}

CartForest CartForest::fit(const Dataset& data, const FeatureWeights& weights,
                           const CartConfig& cfg) {
  if (data.size() == 0)
    throw std::invalid_argument("CartForest: empty training set");
  if (cfg.trees == 0)
    throw std::invalid_argument("CartForest: need at least one tree");
  if (weights.size() != data.dims())
    throw std::invalid_argument("CartForest: weights/data dimension mismatch");

  const std::size_t n = data.size();
  const std::size_t n_boot = cfg.n_boot == 0 ? n : cfg.n_boot;
  const bool observed = cfg.observer != nullptr && resolve_workers(cfg.workers) == 1;

  std::vector<CartTree> trees(cfg.trees);
  parallel_for(cfg.trees, cfg.workers, [&](std::size_t t) {
    Rng rng(derive_stream(cfg.seed, t));
    std::vector<std::size_t> idx;
    if (cfg.bootstrap) {
      idx.resize(n_boot);
      for (std::size_t i = 0; i < n_boot; ++i)
        idx[i] = static_cast<std::size_t>(rng.next_below(n));
    } else {
      idx.resize(n);
      std::iota(idx.begin(), idx.end(), 0);
    }
    CartBuilder builder{data, weights, cfg, t, rng, trees[t], std::move(idx), observed};
    builder.build(0, 0, builder.idx.size());
  });
  return CartForest(std::move(trees), weights, cfg, data.dims());
}

double CartForest::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> CartForest::predict_batch(const FeatureMatrix& X,
                                              unsigned workers) const {
  std::vector<double> out(X.rows());
  parallel_for(X.rows(), workers, [&](std::size_t i) {
    std::vector<double> row(X.cols());
    X.row(i, row);
    out[i] = predict(row);
  });
  return out;
}

}  // namespace tlrf
