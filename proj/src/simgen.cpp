#include "tlrf/simgen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tlrf/rng.hpp"

namespace tlrf {

std::size_t SimConfig::d0() const {
  return d - static_cast<std::size_t>(std::floor(static_cast<double>(d) * discrepancy));
}

void SimConfig::validate() const {
  if (d == 0 || d % 2 != 0)
    throw std::invalid_argument("SimConfig: d must be even and positive");
  if (discrepancy < 0.0 || discrepancy > 0.5)
    throw std::invalid_argument("SimConfig: discrepancy must lie in [0, 0.5]");
  if (noise_sd < 0.0)
    throw std::invalid_argument("SimConfig: noise_sd must be nonnegative");
}

double f_source(std::span<const double> x) {
  if (x.size() % 2 != 0)
    throw std::invalid_argument("f_source: dimension must be even");
  const std::size_t half = x.size() / 2;
  double v = 0.0;
  for (std::size_t i = 0; i < half; ++i) v += std::exp(-x[i]);
  for (std::size_t i = half; i < x.size(); ++i) v += std::tanh(x[i]);
  return v;
}

double f_target(std::span<const double> x, std::size_t d0) {
  if (x.size() % 2 != 0)
    throw std::invalid_argument("f_target: dimension must be even");
  const std::size_t half = x.size() / 2;
  if (d0 < half || d0 > x.size())
    throw std::invalid_argument("f_target: d0 must lie in [d/2, d]");
  double v = 0.0;
  for (std::size_t i = 0; i < half; ++i) v += std::exp(-x[i]);
  for (std::size_t i = half; i < d0; ++i) v += std::tanh(x[i]);
  for (std::size_t i = d0; i < x.size(); ++i)
    v += 6.0 * std::sin(2.0 * std::numbers::pi * x[i]);
  return v;
}

double f1_dominant(std::span<const double> x, std::size_t d0) {
  return f_target(x, d0);
}

double f2_flat(std::span<const double> x) { return f_source(x); }

Dataset gen_dataset(const SimConfig& cfg, Domain domain) {
  cfg.validate();
  std::size_t n = 0;
  switch (domain) {
    case Domain::Source: n = cfg.n_source; break;
    case Domain::Target: n = cfg.n_target; break;
    case Domain::Test: n = cfg.n_test; break;
  }
  const std::uint64_t dataset_seed =
      derive_stream(cfg.seed, static_cast<std::uint64_t>(domain));

  Dataset out;
  out.X = FeatureMatrix(n, cfg.d);
  out.y.resize(n);
  std::vector<double> row(cfg.d);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_stream(dataset_seed, i));
    for (std::size_t j = 0; j < cfg.d; ++j) {
      row[j] = rng.uniform01();
      out.X(i, j) = row[j];
    }
    const double mean = domain == Domain::Source ? f_source(row)
                                                 : f_target(row, cfg.d0());
    out.y[i] = mean + cfg.noise_sd * rng.normal();
  }
  return out;
}

}  // namespace tlrf
