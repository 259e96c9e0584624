#pragma once

#include <span>

#include "scenefuse/nn/layers.hpp"

namespace sf::nn {

inline constexpr double kProbabilityFloor = 1e-7;

struct LossResult {
  double loss = 0.0;        // divergence + regularizer
  double divergence = 0.0;  // sum over samples and classes
  double regularizer = 0.0; // (lambda / 2) * ||theta||^2
};

/// sum_n sum_c y log(y / clamp(y_hat)) + (lambda / 2) ||theta||^2.
/// Writes dL/dy_hat into `grad_y_hat` and adds lambda * theta to every
/// parameter gradient. Throws label error unless each row of `y` is a
/// distribution, shape error if `y` and `y_hat` differ.
template <typename T>
LossResult kl_loss(const Tensor<T>& y, const Tensor<T>& y_hat, std::span<const ParamRef<T>> params,
                   double lambda, Tensor<T>* grad_y_hat);

/// Rows of `y` must be non-negative and sum to 1 within 1e-6.
template <typename T>
void validate_labels(const Tensor<T>& y);

}  // namespace sf::nn
