#pragma once

#include <cstdint>
#include <vector>

#include "scenefuse/nn/layers.hpp"

namespace sf::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Moment slots mirror the parameter
/// shapes captured at construction.
template <typename T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>> params, AdamConfig config = {});

  /// Throws numeric error, leaving every parameter untouched, if any
  /// gradient entry is not finite.
  void step();

  std::uint64_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }
  const Tensor<T>& first_moment(std::size_t i) const { return m_.at(i); }
  const Tensor<T>& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  std::vector<ParamRef<T>> params_;
  AdamConfig config_;
  std::vector<Tensor<T>> m_, v_;
  std::uint64_t t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace sf::nn
