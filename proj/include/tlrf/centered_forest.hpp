#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tlrf/data.hpp"
#include "tlrf/dcov.hpp"
#include "tlrf/rng.hpp"

namespace tlrf {

/// Fixed-depth tree over [0,1]^d: every internal node splits a randomly
/// chosen feature at the midpoint of its cell, so the tree is a perfect
/// binary tree of 2^depth leaves stored in heap order. Splitting continues
/// to full depth even through cells holding fewer than two points; an empty
/// leaf predicts 0.
struct CenteredTree {
  int depth = 0;
  std::size_t n_features = 0;
  std::vector<int> split_feature;        // 2^depth - 1 internal nodes
  std::vector<double> split_value;       // cell midpoint along the feature
  std::vector<double> leaf_mean;         // 2^depth leaves, 0 when empty
  std::vector<std::uint32_t> leaf_count;

  std::size_t leaves() const { return leaf_mean.size(); }

  /// Index of the leaf cell containing x. Points on a split boundary go
  /// right, making the cells half-open [lo, hi) with the top face closed.
  std::size_t leaf_index(std::span<const double> x) const;

  double predict(std::span<const double> x) const { return leaf_mean[leaf_index(x)]; }
};

/// Builds the random partition and fills leaf statistics from `data`.
/// Feature draws follow `weights`; one draw per internal node in preorder.
CenteredTree build_centered_tree(const Dataset& data, const FeatureWeights& weights,
                                 int depth, Rng& rng);

struct CenteredForestConfig {
  int depth = 1;
  std::size_t trees = 100;
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0 = all cores; result is identical for any value
};

class CenteredForest {
 public:
  CenteredForest(std::vector<CenteredTree> trees, FeatureWeights weights,
                 int depth, std::uint64_t seed);

  /// Grows cfg.trees trees on the same data (no resampling); tree m uses
  /// the RNG stream derived from (seed, m).
  static CenteredForest fit(const Dataset& data, const FeatureWeights& weights,
                            const CenteredForestConfig& cfg);

  /// Arithmetic mean of the tree predictions.
  double predict(std::span<const double> x) const;
  std::vector<double> predict_batch(const FeatureMatrix& X, unsigned workers = 0) const;

  const std::vector<CenteredTree>& trees() const { return trees_; }
  const FeatureWeights& weights() const { return weights_; }
  int depth() const { return depth_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t dims() const { return weights_.size(); }

 private:
  std::vector<CenteredTree> trees_;
  FeatureWeights weights_;
  int depth_;
  std::uint64_t seed_;
};

/// Depth candidates {h odd, h <= log2(n)}.
std::vector<int> cv_depth_candidates(std::size_t n);

/// k-fold cross validation over the candidate depths; returns the candidate
/// with the smallest mean held-out MSE, smallest depth on ties. A single
/// candidate is returned without running CV.
int cv_select_depth(const Dataset& data, const FeatureWeights& weights,
                    std::size_t trees, int folds, std::uint64_t seed,
                    unsigned workers = 0);

}  // namespace tlrf
