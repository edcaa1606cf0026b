#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tlrf {

/// Column-major numeric matrix. Each feature occupies a contiguous block,
/// which is the access pattern of the per-feature scans in the distance
/// covariance and split-search code.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  double operator()(std::size_t i, std::size_t j) const {
    return data_[j * rows_ + i];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[j * rows_ + i];
  }

  std::span<const double> col(std::size_t j) const {
    return {data_.data() + j * rows_, rows_};
  }
  std::span<double> col(std::size_t j) {
    return {data_.data() + j * rows_, rows_};
  }

  /// Copies row i into `out` (must hold cols() values).
  void row(std::size_t i, std::span<double> out) const {
    for (std::size_t j = 0; j < cols_; ++j) out[j] = (*this)(i, j);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A feature matrix with its paired response vector.
struct Dataset {
  FeatureMatrix X;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  std::size_t dims() const { return X.cols(); }

  /// Row subset, in the order given by `idx`.
  Dataset subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.X = FeatureMatrix(idx.size(), X.cols());
    out.y.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] >= size()) throw std::out_of_range("Dataset::subset: bad index");
      for (std::size_t j = 0; j < X.cols(); ++j) out.X(r, j) = X(idx[r], j);
      out.y[r] = y[idx[r]];
    }
    return out;
  }
};

}  // namespace tlrf
