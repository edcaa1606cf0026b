#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tlrf/cart_forest.hpp"
#include "tlrf/centered_forest.hpp"
#include "tlrf/data.hpp"
#include "tlrf/dcov.hpp"

namespace tlrf {

enum class ForestKind { Centered, Cart };

/// How the residual forest weights its features.
enum class WeightScheme { DCov, Uniform };

struct TransferConfig {
  std::size_t trees = 100;

  // centered forests: 0 selects the depth by cross validation
  int source_depth = 0;
  int residual_depth = 0;

  // cart forests
  std::size_t source_mtry = 0;    // 0 -> floor(sqrt(d))
  std::size_t residual_mtry = 0;
  std::size_t source_n_boot = 0;  // 0 -> training size
  std::size_t residual_n_boot = 0;
  int source_max_depth = 0;    // 0 -> ceil(log2(n_boot)), -1 -> unlimited
  int residual_max_depth = 0;

  int cv_folds = 5;
  DCovKind estimator = DCovKind::FastU;
  WeightScheme residual_weights = WeightScheme::DCov;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

/// The disjoint halves of the target sample: `train_idx` feeds the residual
/// forest, `dcov_idx` feeds the weight estimation, never the other way
/// around.
struct SplitAssignment {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> dcov_idx;
};

/// Source forest + residual forest + the weight vector the residual forest
/// was trained with. The prediction is always the sum of the two parts.
struct TransferModel {
  ForestKind kind;
  std::optional<CenteredForest> source_crf;
  std::optional<CenteredForest> residual_crf;
  std::optional<CartForest> source_srf;
  std::optional<CartForest> residual_srf;
  FeatureWeights dcov_weights;
  SplitAssignment split;

  double predict_source(std::span<const double> x) const;
  double predict_residual(std::span<const double> x) const;
  std::vector<double> predict_batch(const FeatureMatrix& X, unsigned workers = 0) const;
};

/// Elementwise y - preds; y == preds + residuals exactly.
std::vector<double> residualize(std::span<const double> y,
                                std::span<const double> preds);

/// Random disjoint cover of {0..n-1} into halves of size ceil(n/2) and
/// floor(n/2); deterministic under seed. Requires n >= 2.
SplitAssignment split_target(std::size_t n, std::uint64_t seed);

/// Three stages: uniform-weight source forest, residuals on every target
/// row, then a residual forest on one half of the target data whose feature
/// weights come from per-feature distance covariance between features and
/// residuals on the other half.
TransferModel fit_tlcrf(const Dataset& source, const Dataset& target,
                        const TransferConfig& cfg);
TransferModel fit_tlsrf(const Dataset& source, const Dataset& target,
                        const TransferConfig& cfg);

/// Source prediction plus residual prediction, exactly.
double predict_transfer(const TransferModel& model, std::span<const double> x);

}  // namespace tlrf
