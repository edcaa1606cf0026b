#include "tlrf/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tlrf/rng.hpp"

namespace tlrf {

namespace {

// sub-stream indices off TransferConfig::seed
constexpr std::uint64_t kSourceStream = 1;
constexpr std::uint64_t kSplitStream = 2;
constexpr std::uint64_t kResidualStream = 3;
constexpr std::uint64_t kSourceCvStream = 4;
constexpr std::uint64_t kResidualCvStream = 5;

int resolve_cart_depth(int configured, std::size_t n_boot) {
  if (configured > 0) return configured;
  if (configured < 0) return -1;
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(n_boot, 2)))));
}

FeatureWeights residual_weights_for(const Dataset& target,
                                    std::span<const double> residuals,
                                    const SplitAssignment& split,
                                    const TransferConfig& cfg) {
  if (cfg.residual_weights == WeightScheme::Uniform)
    return FeatureWeights::uniform(target.dims());
  const std::size_t m = split.dcov_idx.size();
  FeatureMatrix xd(m, target.dims());
  std::vector<double> rd(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < target.dims(); ++j)
      xd(r, j) = target.X(split.dcov_idx[r], j);
    rd[r] = residuals[split.dcov_idx[r]];
  }
  const auto estimates = dcov_per_feature(xd, rd, cfg.estimator);
  return feature_weights(estimates);
}

Dataset residual_training_set(const Dataset& target,
                              std::span<const double> residuals,
                              const SplitAssignment& split) {
  Dataset out = target.subset(split.train_idx);
  for (std::size_t r = 0; r < split.train_idx.size(); ++r)
    out.y[r] = residuals[split.train_idx[r]];
  return out;
}

}  // namespace

std::vector<double> residualize(std::span<const double> y,
                                std::span<const double> preds) {
  if (y.size() != preds.size())
    throw std::invalid_argument("residualize: length mismatch");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - preds[i];
  return out;
}

SplitAssignment split_target(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("split_target: need at least 2 rows");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_stream(seed, 0));
  rng.shuffle(perm);

  const std::size_t train_size = (n + 1) / 2;
  SplitAssignment out;
  out.train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train_size));
  out.dcov_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(train_size), perm.end());
  std::sort(out.train_idx.begin(), out.train_idx.end());
  std::sort(out.dcov_idx.begin(), out.dcov_idx.end());
  return out;
}

double TransferModel::predict_source(std::span<const double> x) const {
  return kind == ForestKind::Centered ? source_crf->predict(x)
                                      : source_srf->predict(x);
}

double TransferModel::predict_residual(std::span<const double> x) const {
  return kind == ForestKind::Centered ? residual_crf->predict(x)
                                      : residual_srf->predict(x);
}

std::vector<double> TransferModel::predict_batch(const FeatureMatrix& X,
                                                 unsigned workers) const {
  const auto src = kind == ForestKind::Centered
                       ? source_crf->predict_batch(X, workers)
                       : source_srf->predict_batch(X, workers);
  const auto res = kind == ForestKind::Centered
                       ? residual_crf->predict_batch(X, workers)
                       : residual_srf->predict_batch(X, workers);
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = src[i] + res[i];
  return out;
}

double predict_transfer(const TransferModel& model, std::span<const double> x) {
  return model.predict_source(x) + model.predict_residual(x);
}

TransferModel fit_tlcrf(const Dataset& source, const Dataset& target,
                        const TransferConfig& cfg) {
  if (source.size() == 0) throw std::invalid_argument("fit_tlcrf: empty source");
  if (target.size() < 2)
    throw std::invalid_argument("fit_tlcrf: need at least 2 target rows");
  if (source.dims() != target.dims())
    throw std::invalid_argument("fit_tlcrf: source/target dimension mismatch");
  const std::size_t d = source.dims();

  const FeatureWeights uniform = FeatureWeights::uniform(d);
  int depth_s = cfg.source_depth;
  if (depth_s <= 0)
    depth_s = cv_select_depth(source, uniform, cfg.trees, cfg.cv_folds,
                              derive_stream(cfg.seed, kSourceCvStream), cfg.workers);
  CenteredForestConfig src_cfg;
  src_cfg.depth = depth_s;
  src_cfg.trees = cfg.trees;
  src_cfg.seed = derive_stream(cfg.seed, kSourceStream);
  src_cfg.workers = cfg.workers;
  CenteredForest src = CenteredForest::fit(source, uniform, src_cfg);

  const auto preds = src.predict_batch(target.X, cfg.workers);
  const auto residuals = residualize(target.y, preds);
  const auto split = split_target(target.size(), derive_stream(cfg.seed, kSplitStream));

  FeatureWeights w = residual_weights_for(target, residuals, split, cfg);
  const Dataset train = residual_training_set(target, residuals, split);

  int depth_r = cfg.residual_depth;
  if (depth_r <= 0)
    depth_r = cv_select_depth(train, w, cfg.trees, cfg.cv_folds,
                              derive_stream(cfg.seed, kResidualCvStream), cfg.workers);
  CenteredForestConfig res_cfg;
  res_cfg.depth = depth_r;
  res_cfg.trees = cfg.trees;
  res_cfg.seed = derive_stream(cfg.seed, kResidualStream);
  res_cfg.workers = cfg.workers;
  CenteredForest res = CenteredForest::fit(train, w, res_cfg);

  return TransferModel{ForestKind::Centered, std::move(src), std::move(res),
                       std::nullopt,         std::nullopt,   std::move(w),
                       split};
}

TransferModel fit_tlsrf(const Dataset& source, const Dataset& target,
                        const TransferConfig& cfg) {
  if (source.size() == 0) throw std::invalid_argument("fit_tlsrf: empty source");
  if (target.size() < 2)
    throw std::invalid_argument("fit_tlsrf: need at least 2 target rows");
  if (source.dims() != target.dims())
    throw std::invalid_argument("fit_tlsrf: source/target dimension mismatch");
  const std::size_t d = source.dims();

  CartConfig src_cfg;
  src_cfg.trees = cfg.trees;
  src_cfg.mtry = cfg.source_mtry;
  src_cfg.n_boot = cfg.source_n_boot == 0 ? source.size() : cfg.source_n_boot;
  src_cfg.max_depth = resolve_cart_depth(cfg.source_max_depth, src_cfg.n_boot);
  src_cfg.seed = derive_stream(cfg.seed, kSourceStream);
  src_cfg.workers = cfg.workers;
  CartForest src = CartForest::fit(source, FeatureWeights::uniform(d), src_cfg);

  const auto preds = src.predict_batch(target.X, cfg.workers);
  const auto residuals = residualize(target.y, preds);
  const auto split = split_target(target.size(), derive_stream(cfg.seed, kSplitStream));

  FeatureWeights w = residual_weights_for(target, residuals, split, cfg);
  const Dataset train = residual_training_set(target, residuals, split);

  CartConfig res_cfg;
  res_cfg.trees = cfg.trees;
  res_cfg.mtry = cfg.residual_mtry;
  res_cfg.n_boot = cfg.residual_n_boot == 0 ? train.size() : cfg.residual_n_boot;
  res_cfg.max_depth = resolve_cart_depth(cfg.residual_max_depth, res_cfg.n_boot);
  res_cfg.seed = derive_stream(cfg.seed, kResidualStream);
  res_cfg.workers = cfg.workers;
  CartForest res = CartForest::fit(train, w, res_cfg);

  return TransferModel{ForestKind::Cart, std::nullopt,   std::nullopt,
                       std::move(src),   std::move(res), std::move(w),
                       split};
}

}  // namespace tlrf
