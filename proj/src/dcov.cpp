#include "tlrf/dcov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tlrf {

namespace {

constexpr std::size_t kStreamingThreshold = 20000;

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("dcov: input vectors differ in length");
  if (x.empty()) throw std::invalid_argument("dcov: empty input");
}

/// Row sums of the pairwise distance matrix of a univariate sample,
/// O(n log n) via sorted prefix sums. `order` must sort x ascending.
std::vector<double> dist_row_sums(std::span<const double> x,
                                  std::span<const std::size_t> order) {
  const std::size_t n = x.size();
  std::vector<double> row(n, 0.0);
  double prefix = 0.0;
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) total += x[order[p]];
  for (std::size_t p = 0; p < n; ++p) {
    const double v = x[order[p]];
    prefix += v;
    // sum over the p+1 values <= v plus the rest above it
    row[order[p]] = v * (2.0 * static_cast<double>(p + 1) - static_cast<double>(n)) +
                    total - 2.0 * prefix;
  }
  return row;
}

std::vector<std::size_t> sorted_order(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  return order;
}

/// Fenwick tree over y-ranks accumulating (count, sum x, sum y, sum xy).
struct PairAccumulator {
  explicit PairAccumulator(std::size_t n)
      : cnt(n + 1, 0.0), sx(n + 1, 0.0), sy(n + 1, 0.0), sxy(n + 1, 0.0) {}

  void add(std::size_t rank, double xv, double yv) {
    for (std::size_t i = rank + 1; i < cnt.size(); i += i & (~i + 1)) {
      cnt[i] += 1.0;
      sx[i] += xv;
      sy[i] += yv;
      sxy[i] += xv * yv;
    }
  }

  // inclusive prefix over ranks [0, rank]
  void query(std::size_t rank, double& c, double& x, double& y, double& xy) const {
    c = x = y = xy = 0.0;
    for (std::size_t i = rank + 1; i > 0; i -= i & (~i + 1)) {
      c += cnt[i];
      x += sx[i];
      y += sy[i];
      xy += sxy[i];
    }
  }

  std::vector<double> cnt, sx, sy, sxy;
};

/// sum_{k,l} |x_k - x_l| |y_k - y_l| in O(n log n).
double product_sum_fast(std::span<const double> x, std::span<const double> y,
                        std::span<const std::size_t> x_order) {
  const std::size_t n = x.size();
  const auto y_order = sorted_order(y);
  std::vector<std::size_t> y_rank(n);
  for (std::size_t r = 0; r < n; ++r) y_rank[y_order[r]] = r;

  PairAccumulator acc(n);
  double seen_c = 0.0, seen_x = 0.0, seen_y = 0.0, seen_xy = 0.0;
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t j = x_order[p];
    const double xj = x[j], yj = y[j];
    double c1, sx1, sy1, sxy1;
    acc.query(y_rank[j], c1, sx1, sy1, sxy1);
    const double c2 = seen_c - c1;
    const double sx2 = seen_x - sx1;
    const double sy2 = seen_y - sy1;
    const double sxy2 = seen_xy - sxy1;
    // earlier points with y_i <= y_j: both factors are (xj - xi), (yj - yi)
    total += c1 * xj * yj - xj * sy1 - yj * sx1 + sxy1;
    // earlier points with y_i > y_j: factors (xj - xi), (yi - yj)
    total += xj * sy2 - c2 * xj * yj - sxy2 + yj * sx2;
    acc.add(y_rank[j], xj, yj);
    seen_c += 1.0;
    seen_x += xj;
    seen_y += yj;
    seen_xy += xj * yj;
  }
  return 2.0 * total;
}

}  // namespace

FeatureMatrix pairwise_dist(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("pairwise_dist: empty input");
  const std::size_t n = x.size();
  FeatureMatrix m(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) m(k, l) = std::abs(x[k] - x[l]);
  return m;
}

DCovEstimate dcov_v2(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  const double dn = static_cast<double>(n);

  double value = 0.0;
  if (n <= kStreamingThreshold) {
    FeatureMatrix a = pairwise_dist(x);
    FeatureMatrix b = pairwise_dist(y);
    std::vector<double> ar(n, 0.0), br(n, 0.0);
    double ag = 0.0, bg = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = 0; l < n; ++l) {
        ar[k] += a(k, l);
        br[k] += b(k, l);
      }
      ag += ar[k];
      bg += br[k];
    }
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = 0; l < n; ++l) {
        const double A = a(k, l) - ar[k] / dn - ar[l] / dn + ag / (dn * dn);
        const double B = b(k, l) - br[k] / dn - br[l] / dn + bg / (dn * dn);
        value += A * B;
      }
    }
  } else {
    // row statistics only; distances recomputed on the fly
    const auto xo = sorted_order(x);
    const auto yo = sorted_order(y);
    const auto ar = dist_row_sums(x, xo);
    const auto br = dist_row_sums(y, yo);
    const double ag = std::accumulate(ar.begin(), ar.end(), 0.0);
    const double bg = std::accumulate(br.begin(), br.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = 0; l < n; ++l) {
        const double A =
            std::abs(x[k] - x[l]) - ar[k] / dn - ar[l] / dn + ag / (dn * dn);
        const double B =
            std::abs(y[k] - y[l]) - br[k] / dn - br[l] / dn + bg / (dn * dn);
        value += A * B;
      }
    }
  }
  value /= dn * dn;
  return {std::max(value, 0.0), DCovKind::V, n};
}

DCovEstimate dcov_u(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  if (n < 4)
    throw std::invalid_argument("dcov_u: insufficient sample for U-statistic");
  const double dn = static_cast<double>(n);

  FeatureMatrix a = pairwise_dist(x);
  FeatureMatrix b = pairwise_dist(y);
  std::vector<double> ar(n, 0.0), br(n, 0.0);
  double ag = 0.0, bg = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      ar[k] += a(k, l);
      br[k] += b(k, l);
    }
    ag += ar[k];
    bg += br[k];
  }
  double value = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      if (k == l) continue;
      const double A = a(k, l) - ar[k] / (dn - 2.0) - ar[l] / (dn - 2.0) +
                       ag / ((dn - 1.0) * (dn - 2.0));
      const double B = b(k, l) - br[k] / (dn - 2.0) - br[l] / (dn - 2.0) +
                       bg / ((dn - 1.0) * (dn - 2.0));
      value += A * B;
    }
  }
  value /= dn * (dn - 3.0);
  return {value, DCovKind::U, n};
}

DCovEstimate dcov_fast(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  if (n < 4)
    throw std::invalid_argument("dcov_fast: insufficient sample for U-statistic");
  const double dn = static_cast<double>(n);

  const auto xo = sorted_order(x);
  const auto yo = sorted_order(y);
  const auto ar = dist_row_sums(x, xo);
  const auto br = dist_row_sums(y, yo);
  const double ag = std::accumulate(ar.begin(), ar.end(), 0.0);
  const double bg = std::accumulate(br.begin(), br.end(), 0.0);

  const double s1 = product_sum_fast(x, y, xo);
  double s2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) s2 += ar[k] * br[k];
  const double s3 = ag * bg;

  const double value = s1 / (dn * (dn - 3.0)) -
                       2.0 * s2 / (dn * (dn - 2.0) * (dn - 3.0)) +
                       s3 / (dn * (dn - 1.0) * (dn - 2.0) * (dn - 3.0));
  return {value, DCovKind::FastU, n};
}

FeatureWeights::FeatureWeights(std::vector<double> probs) : p_(std::move(probs)) {
  if (p_.empty()) throw std::invalid_argument("FeatureWeights: empty vector");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0)) throw std::invalid_argument("FeatureWeights: negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("FeatureWeights: entries must sum to 1");
}

FeatureWeights FeatureWeights::uniform(std::size_t d) {
  if (d == 0) throw std::invalid_argument("FeatureWeights: d must be positive");
  std::vector<double> p(d, 1.0 / static_cast<double>(d));
  // make the sum exactly representable-independent: renormalize once
  double s = 0.0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
  return FeatureWeights(std::move(p));
}

FeatureWeights feature_weights(std::span<const DCovEstimate> estimates) {
  if (estimates.empty())
    throw std::invalid_argument("feature_weights: no estimates");
  std::vector<double> w(estimates.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    w[j] = std::max(estimates[j].value, 0.0);
    sum += w[j];
  }
  if (sum <= 1e-12) return FeatureWeights::uniform(estimates.size());
  for (double& v : w) v /= sum;
  double s2 = 0.0;
  for (double v : w) s2 += v;
  for (double& v : w) v /= s2;
  return FeatureWeights(std::move(w));
}

std::vector<DCovEstimate> dcov_per_feature(const FeatureMatrix& X,
                                           std::span<const double> y,
                                           DCovKind kind) {
  std::vector<DCovEstimate> out;
  out.reserve(X.cols());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    switch (kind) {
      case DCovKind::V:
        out.push_back(dcov_v2(X.col(j), y));
        break;
      case DCovKind::U:
        out.push_back(dcov_u(X.col(j), y));
        break;
      case DCovKind::FastU:
        out.push_back(dcov_fast(X.col(j), y));
        break;
    }
  }
  return out;
}

}  // namespace tlrf
