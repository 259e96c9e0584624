#pragma once

#include <utility>
#include <vector>

#include "scenefuse/nn/layers.hpp"

namespace sf::nn {

struct MixupDraw {
  double coefficient = 1.0;
  /// partner[i] is the sample mixed into sample i.
  std::vector<std::size_t> partner;
};

/// Beta(alpha, alpha) from two gamma draws. Throws spec error for alpha <= 0.
double sample_beta(double alpha, Rng& rng);

/// Coefficient from Beta(alpha, alpha) and a uniform random permutation.
MixupDraw draw_mixup(std::size_t batch, double alpha, Rng& rng);

/// x'_i = m x_i + (1 - m) x_partner(i), labels likewise. Throws
/// too-small-batch error for fewer than 2 samples and spec error for an
/// invalid draw.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> mixup_batch(const Tensor<T>& x, const Tensor<T>& y, const MixupDraw& draw);

}  // namespace sf::nn
