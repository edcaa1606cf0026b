#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "tlrf/data.hpp"

namespace tlrf {

/// Synthetic-study configuration. Features are U(0,1)^d; the source and
/// target regression functions agree on the first d0 coordinates and differ
/// on the last d - d0, where d0 = d - floor(d * discrepancy).
struct SimConfig {
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  std::size_t n_test = 0;
  std::size_t d = 0;
  double discrepancy = 0.0;  // fraction of features whose association differs
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  std::size_t d0() const;
  void validate() const;
};

enum class Domain { Source, Target, Test };

/// sum_{i<=d/2} exp(-x_i) + sum_{i>d/2} tanh(x_i). Requires even d.
double f_source(std::span<const double> x);

/// sum_{i<=d/2} exp(-x_i) + sum_{d/2<i<=d0} tanh(x_i)
///   + sum_{i>d0} 6 sin(2 pi x_i). Requires d/2 <= d0 <= d.
double f_target(std::span<const double> x, std::size_t d0);

/// Regression functions of the dominant-feature study: f1 has a block of
/// high-amplitude sine features, f2 has none.
double f1_dominant(std::span<const double> x, std::size_t d0);
double f2_flat(std::span<const double> x);

/// X ~ U(0,1)^d i.i.d., Y = f(X) + noise_sd * N(0,1) with f chosen by
/// domain (source uses f_source, target and test use f_target at cfg.d0()).
/// Each row has its own derived RNG stream, so generation is reproducible
/// and order-independent.
Dataset gen_dataset(const SimConfig& cfg, Domain domain);

}  // namespace tlrf
