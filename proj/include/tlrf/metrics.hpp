#pragma once

#include <span>

namespace tlrf {

/// Mean squared difference.
double mse(std::span<const double> pred, std::span<const double> truth);

/// Probability that a random positive outscores a random negative, with
/// ties counted 1/2 (midrank Mann-Whitney). Labels are 0/1; both classes
/// must be present.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace tlrf
