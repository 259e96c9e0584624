#pragma once

#include <cstddef>
#include <vector>

namespace sf::audio {

/// Dense row-major matrix used between front-end stages (rows are frequency
/// bins or bands, columns are frames).
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

}  // namespace sf::audio
