#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tlrf/data.hpp"
#include "tlrf/dcov.hpp"
#include "tlrf/rng.hpp"

namespace tlrf {

/// Best split found for a node: threshold sits strictly between two
/// consecutive distinct sorted values of the feature at that node.
struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double sse_left = 0.0;
  double sse_right = 0.0;

  double total_sse() const { return sse_left + sse_right; }
};

/// m distinct feature indices drawn sequentially without replacement, each
/// draw proportional to the remaining weights (renormalizing after every
/// draw). Zero-weight features are drawn only once the positive-weight pool
/// is exhausted. Returned sorted ascending.
std::vector<std::size_t> weighted_subset(std::size_t d, std::size_t m,
                                         const FeatureWeights& weights, Rng& rng);

/// Minimizes the summed children SSE over every (feature, threshold) pair
/// with feature in `features`. Ties resolve to the lowest feature index,
/// then the smallest threshold. Returns nullopt for pure nodes, nodes with
/// fewer than two samples, or when no candidate feature has two distinct
/// values.
std::optional<SplitCandidate> best_split(const Dataset& data,
                                         std::span<const std::size_t> samples,
                                         std::span<const std::size_t> features);

struct CartTree {
  // flattened preorder arrays; feature == -1 marks a leaf
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;  // leaf mean
  std::vector<std::uint32_t> count;

  double predict(std::span<const double> x) const;
  std::size_t nodes() const { return feature.size(); }
};

/// Called on every internal node with the drawn feature subset and the
/// chosen split; only invoked on single-worker builds.
using NodeObserver =
    std::function<void(std::size_t tree, std::span<const std::size_t> subset,
                       const SplitCandidate& chosen)>;

struct CartConfig {
  std::size_t trees = 100;
  std::size_t mtry = 0;    // 0 -> floor(sqrt(d))
  std::size_t n_boot = 0;  // 0 -> n
  int max_depth = -1;      // -1 -> unlimited
  bool bootstrap = true;   // false: every tree sees the full sample once
  std::uint64_t seed = 0;
  unsigned workers = 0;
  const NodeObserver* observer = nullptr;
};

class CartForest {
 public:
  CartForest(std::vector<CartTree> trees, FeatureWeights weights, CartConfig cfg,
             std::size_t dims);

  /// Grows cfg.trees CART trees, each on its own bootstrap resample; the
  /// feature subset at every node is drawn by weighted_subset.
  static CartForest fit(const Dataset& data, const FeatureWeights& weights,
                        const CartConfig& cfg);

  double predict(std::span<const double> x) const;
  std::vector<double> predict_batch(const FeatureMatrix& X, unsigned workers = 0) const;

  const std::vector<CartTree>& trees() const { return trees_; }
  const FeatureWeights& weights() const { return weights_; }
  const CartConfig& config() const { return cfg_; }
  std::size_t dims() const { return dims_; }

 private:
  std::vector<CartTree> trees_;
  FeatureWeights weights_;
  CartConfig cfg_;
  std::size_t dims_;
};

}  // namespace tlrf
