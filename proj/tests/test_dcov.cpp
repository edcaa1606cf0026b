#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <vector>

#include "tlrf/dcov.hpp"
#include "tlrf/rng.hpp"

using namespace tlrf;

namespace {

// Independent V-statistic oracle: expand the double-centered product into
// raw distance sums instead of centering matrices.
//   V2 = S1/n^2 + (a../n^2)(b../n^2) - (2/n^3) * sum_k a_k. b_k.
double v2_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  const double dn = static_cast<double>(n);
  double s1 = 0.0, ag = 0.0, bg = 0.0, s2 = 0.0;
  std::vector<double> ar(n, 0.0), br(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      const double a = std::abs(x[k] - x[l]);
      const double b = std::abs(y[k] - y[l]);
      s1 += a * b;
      ar[k] += a;
      br[k] += b;
    }
  for (std::size_t k = 0; k < n; ++k) {
    ag += ar[k];
    bg += br[k];
    s2 += ar[k] * br[k];
  }
  return s1 / (dn * dn) + (ag / (dn * dn)) * (bg / (dn * dn)) -
         2.0 * s2 / (dn * dn * dn);
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& e : v) e = rng.uniform01();
  return v;
}

}  // namespace

TEST_CASE("pairwise_dist basic shapes") {
  {
    const std::vector<double> x{0.0, 1.0};
    const auto m = pairwise_dist(x);
    CHECK(m(0, 0) == 0.0);
    CHECK(m(0, 1) == 1.0);
    CHECK(m(1, 0) == 1.0);
    CHECK(m(1, 1) == 0.0);
  }
  {
    const std::vector<double> x{5.0};
    const auto m = pairwise_dist(x);
    CHECK(m.rows() == 1);
    CHECK(m(0, 0) == 0.0);
  }
  {
    const std::vector<double> x{0.0, 1.0, 2.0};
    const auto m = pairwise_dist(x);
    const double expected[3][3] = {{0, 1, 2}, {1, 0, 1}, {2, 1, 0}};
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t l = 0; l < 3; ++l) CHECK(m(k, l) == expected[k][l]);
  }
}

TEST_CASE("dcov_v2 hand values") {
  const std::vector<double> x01{0.0, 1.0};
  CHECK(dcov_v2(x01, x01).value == doctest::Approx(0.25).epsilon(0).scale(1e-12));

  const std::vector<double> x012{0.0, 1.0, 2.0};
  CHECK(dcov_v2(x012, x012).value ==
        doctest::Approx(40.0 / 81.0).epsilon(0).scale(1e-12));

  const std::vector<double> c{3.0, 3.0, 3.0, 3.0};
  const std::vector<double> y{1.0, 7.0, 2.0, 9.0};
  CHECK(dcov_v2(c, y).value == 0.0);

  CHECK_THROWS_AS(dcov_v2(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("dcov_v2 matches independent sum-expansion oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.next_below(60));
    const auto x = random_vector(rng, n);
    const auto y = random_vector(rng, n);
    const double got = dcov_v2(x, y).value;
    const double want = v2_oracle(x, y);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("dcov_v2 properties: nonnegative, symmetric, translation, scale") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.next_below(40));
    auto x = random_vector(rng, n);
    auto y = random_vector(rng, n);

    const double v = dcov_v2(x, y).value;
    CHECK(v >= 0.0);
    CHECK(dcov_v2(y, x).value == v);

    auto xs = x;
    for (auto& e : xs) e += 7.25;
    CHECK(dcov_v2(xs, y).value == doctest::Approx(v).epsilon(0).scale(1e-12));

    const double a = 2.5, b = -3.0;
    auto xa = x, yb = y;
    for (auto& e : xa) e *= a;
    for (auto& e : yb) e *= b;
    CHECK(dcov_v2(xa, yb).value ==
          doctest::Approx(std::abs(a) * std::abs(b) * v).epsilon(1e-12));
  }
}

TEST_CASE("dcov_u frozen value and edge cases") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  // U-centered reference on x == y, worked out by the O(n^2) oracle: 2/3
  CHECK(dcov_u(x, x).value == doctest::Approx(2.0 / 3.0).epsilon(0).scale(1e-14));
  CHECK(dcov_fast(x, x).value == doctest::Approx(2.0 / 3.0).epsilon(0).scale(1e-12));

  const std::vector<double> c{5.0, 5.0, 5.0, 5.0};
  const std::vector<double> y{0.5, 0.1, 0.9, 0.3};
  CHECK(dcov_u(c, y).value == 0.0);

  const std::vector<double> small{1.0, 2.0, 3.0};
  CHECK_THROWS_WITH_AS(dcov_u(small, small),
                       "dcov_u: insufficient sample for U-statistic",
                       std::invalid_argument);
  CHECK_THROWS_AS(dcov_fast(small, small), std::invalid_argument);
}

TEST_CASE("dcov_u and dcov_fast are symmetric and translation invariant") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.next_below(60));
    auto x = random_vector(rng, n);
    auto y = random_vector(rng, n);
    CHECK(dcov_u(x, y).value == dcov_u(y, x).value);
    CHECK(dcov_fast(x, y).value == dcov_fast(y, x).value);

    auto xs = x;
    for (auto& e : xs) e += 1.5;
    CHECK(dcov_u(xs, y).value ==
          doctest::Approx(dcov_u(x, y).value).epsilon(0).scale(1e-12));
    CHECK(dcov_fast(xs, y).value ==
          doctest::Approx(dcov_fast(x, y).value).epsilon(0).scale(1e-12));
  }
}

TEST_CASE("dcov_fast equals the U-statistic reference, ties included") {
  Rng rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.next_below(509));
    auto x = random_vector(rng, n);
    auto y = random_vector(rng, n);
    if (trial % 3 == 0) {
      for (auto& e : x) e = std::round(e * 10.0) / 10.0;
      for (auto& e : y) e = std::round(e * 10.0) / 10.0;
    }
    const double u = dcov_u(x, y).value;
    const double f = dcov_fast(x, y).value;
    CHECK(std::abs(f - u) <= 1e-9 * std::max(1.0, std::abs(u)));
  }
}

TEST_CASE("dcov_u is centered at zero under independence") {
  // 200 replicates of n = 1000 independent pairs; the mean estimate must
  // sit within 3 standard errors of zero.
  const int reps = 200;
  const std::size_t n = 1000;
  std::vector<double> estimates(reps);
  for (int r = 0; r < reps; ++r) {
    Rng rng(derive_stream(900, static_cast<std::uint64_t>(r)));
    const auto x = random_vector(rng, n);
    const auto y = random_vector(rng, n);
    estimates[r] = dcov_u(x, y).value;
  }
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= reps;
  double var = 0.0;
  for (double e : estimates) var += (e - mean) * (e - mean);
  var /= (reps - 1);
  const double se = std::sqrt(var / reps);
  CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("dcov_fast runtime grows like n log n") {
  const auto time_once = [](std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n), y(n);
    for (auto& e : x) e = rng.uniform01();
    for (auto& e : y) e = rng.uniform01();
    const auto t0 = std::chrono::steady_clock::now();
    volatile double sink = dcov_fast(x, y).value;
    (void)sink;
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
  };
  const auto best_of = [&](std::size_t n) {
    double best = 1e300;
    for (int i = 0; i < 7; ++i) best = std::min(best, time_once(n, 50 + i));
    return best;
  };
  const double t256 = best_of(256);
  const double t4096 = best_of(4096);
  // n log2 n predicts ~24x; allow 2x slack on top of the stated 16.7x
  CHECK(t4096 / t256 <= 33.4);
}

TEST_CASE("feature_weights clamping, fallback, validity") {
  const auto make = [](std::vector<double> vals) {
    std::vector<DCovEstimate> est(vals.size());
    for (std::size_t j = 0; j < vals.size(); ++j)
      est[j] = {vals[j], DCovKind::FastU, 10};
    return feature_weights(est);
  };

  {
    const auto w = make({0.2, 0.3, 0.5});
    CHECK(w[0] == doctest::Approx(0.2).epsilon(0).scale(1e-15));
    CHECK(w[1] == doctest::Approx(0.3).epsilon(0).scale(1e-15));
    CHECK(w[2] == doctest::Approx(0.5).epsilon(0).scale(1e-15));
  }
  {
    const auto w = make({-0.1, 0.3});
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 1.0);
  }
  {
    const auto w = make({0.0, 0.0, 0.0});
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(w[j] == doctest::Approx(1.0 / 3.0).epsilon(0).scale(1e-15));
  }
  CHECK_THROWS_AS(feature_weights({}), std::invalid_argument);

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> vals(1 + rng.next_below(20));
    for (auto& v : vals) v = rng.uniform01() - 0.5;
    const auto w = make(vals);
    double sum = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      CHECK(w[j] >= 0.0);
      sum += w[j];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(0).scale(1e-12));
  }
}

TEST_CASE("FeatureWeights validates its invariants") {
  CHECK_THROWS_AS(FeatureWeights({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(FeatureWeights({-0.5, 1.5}), std::invalid_argument);
  CHECK_THROWS_AS(FeatureWeights(std::vector<double>{}), std::invalid_argument);
  const auto u = FeatureWeights::uniform(7);
  double sum = 0.0;
  for (std::size_t j = 0; j < 7; ++j) sum += u[j];
  CHECK(sum == doctest::Approx(1.0).epsilon(0).scale(1e-12));
}
