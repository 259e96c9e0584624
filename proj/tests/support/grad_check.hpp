#pragma once

// Finite-difference helpers shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "scenefuse/nn/layers.hpp"

namespace sf::test {

using nn::ForwardContext;
using nn::Layer;
using nn::Mode;
using nn::Rng;
using nn::Shape;
using nn::Tensor;

template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.values()) v = static_cast<T>(d(rng));
  return t;
}

// Inputs bounded away from zero so ReLU kinks stay outside the stencil.
template <typename T>
Tensor<T> kink_free_tensor(Shape shape, std::mt19937_64& rng) {
  Tensor<T> t = random_tensor<T>(std::move(shape), rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : t.values()) v = sign(rng) ? v : -v;
  return t;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  return scale == 0 ? 0 : std::sqrt(diff) / scale;
}

// Checks the layer's input and parameter gradients against central
// differences of L = sum(r * forward(x)). Dropout masks are frozen by
// reseeding the generator for every evaluation.
template <typename T>
struct GradCheck {
  double input_error = 0;
  double param_error = 0;
};

template <typename T>
GradCheck<T> gradient_check(Layer<T>& layer, Tensor<T> x, double h, std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed + 1);
  Rng layer_rng(seed);
  auto run = [&](const Tensor<T>& in) {
    layer_rng.seed(seed);
    ForwardContext ctx{Mode::train, &layer_rng, true};
    return layer.forward(in, ctx);
  };
  const Tensor<T> y0 = run(x);
  const Tensor<T> r = random_tensor<T>(y0.shape(), rng);
  auto objective = [&](const Tensor<T>& in) {
    const Tensor<T> y = run(in);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(r[i]) * static_cast<double>(y[i]);
    return s;
  };

  for (auto& p : layer.params()) p.grad->fill(T{0});
  run(x);
  const Tensor<T> dx = layer.backward(r);

  GradCheck<T> out;
  std::vector<double> analytic, numeric;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T saved = x[i];
    x[i] = static_cast<T>(saved + h);
    const double up = objective(x);
    x[i] = static_cast<T>(saved - h);
    const double down = objective(x);
    x[i] = saved;
    analytic.push_back(dx[i]);
    numeric.push_back((up - down) / (2 * h));
  }
  out.input_error = relative_error(analytic, numeric);

  analytic.clear();
  numeric.clear();
  for (auto& p : layer.params()) {
    for (std::size_t i = 0; i < p.value->size(); ++i) {
      T& w = (*p.value)[i];
      const T saved = w;
      w = static_cast<T>(saved + h);
      const double up = objective(x);
      w = static_cast<T>(saved - h);
      const double down = objective(x);
      w = saved;
      analytic.push_back((*p.grad)[i]);
      numeric.push_back((up - down) / (2 * h));
    }
  }
  out.param_error = relative_error(analytic, numeric);
  return out;
}

template <typename T>
struct Tolerance;
template <>
struct Tolerance<double> {
  static constexpr double bound = 1e-5;
  static constexpr double step = 1e-6;
};
template <>
struct Tolerance<float> {
  static constexpr double bound = 1e-3;
  static constexpr double step = 1e-2;
};

template <typename T>
void randomize_params(Layer<T>& layer, std::mt19937_64& rng) {
  for (auto& p : layer.params()) {
    for (auto& v : p.value->values()) v = static_cast<T>(std::uniform_real_distribution<double>(-1, 1)(rng));
  }
}

}  // namespace sf::test
