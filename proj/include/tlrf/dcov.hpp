#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tlrf/data.hpp"

namespace tlrf {

enum class DCovKind { V, U, FastU };

/// A squared sample distance covariance together with the estimator that
/// produced it. V-statistic values are nonnegative; U-statistic values are
/// unbiased and may be negative.
struct DCovEstimate {
  double value = 0.0;
  DCovKind kind = DCovKind::V;
  std::size_t n = 0;
};

/// n x n matrix of absolute differences |x_k - x_l|.
FeatureMatrix pairwise_dist(std::span<const double> x);

/// Biased V-statistic: double-center the distance matrices and average the
/// elementwise product. Always >= 0. For large n the row statistics are
/// streamed instead of materializing the n x n matrices.
DCovEstimate dcov_v2(std::span<const double> x, std::span<const double> y);

/// Unbiased U-statistic in its O(n^2) reference form: U-centered matrices
/// summed over off-diagonal entries, scaled by 1/(n(n-3)). Requires n >= 4.
DCovEstimate dcov_u(std::span<const double> x, std::span<const double> y);

/// Same estimand as dcov_u, computed in O(n log n) with sorted prefix sums
/// and a Fenwick tree. Ties are ordered by original index, so the result is
/// deterministic. Requires n >= 4.
DCovEstimate dcov_fast(std::span<const double> x, std::span<const double> y);

/// A probability vector over features: entries nonnegative, summing to 1.
class FeatureWeights {
 public:
  explicit FeatureWeights(std::vector<double> probs);
  static FeatureWeights uniform(std::size_t d);

  const std::vector<double>& probs() const { return p_; }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t j) const { return p_[j]; }

 private:
  std::vector<double> p_;
};

/// Normalizes per-feature estimates into selection probabilities. Negative
/// (U-statistic) values are clamped to zero first; if everything clamps to
/// ~0 the result falls back to the uniform vector so that sampling stays
/// well defined.
FeatureWeights feature_weights(std::span<const DCovEstimate> estimates);

/// Per-feature estimates of the chosen kind against a common response.
std::vector<DCovEstimate> dcov_per_feature(const FeatureMatrix& X,
                                           std::span<const double> y,
                                           DCovKind kind);

}  // namespace tlrf
