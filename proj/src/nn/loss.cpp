#include "scenefuse/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace sf::nn {

template <typename T>
void validate_labels(const Tensor<T>& y) {
  if (y.rank() != 2) throw Error(ErrorKind::shape, "labels must be N x C, got " + shape_string(y.shape()));
  const std::size_t n = y.dim(0), c = y.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double v = y[i * c + j];
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(ErrorKind::label, "label row " + std::to_string(i) + " has a negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error(ErrorKind::label, "label row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

template <typename T>
LossResult kl_loss(const Tensor<T>& y, const Tensor<T>& y_hat, std::span<const ParamRef<T>> params,
                   double lambda, Tensor<T>* grad_y_hat) {
  if (y.shape() != y_hat.shape()) {
    throw Error(ErrorKind::shape, "labels " + shape_string(y.shape()) + " vs predictions " +
                                      shape_string(y_hat.shape()));
  }
  validate_labels(y);
  if (lambda < 0.0) throw Error(ErrorKind::spec, "negative l2 coefficient");

  LossResult r;
  if (grad_y_hat) *grad_y_hat = Tensor<T>(y_hat.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double target = y[i];
    const double raw = y_hat[i];
    const double p = std::clamp(raw, kProbabilityFloor, 1.0);
    if (target > 0.0) {
      r.divergence += target * (std::log(target) - std::log(p));
      // The clamp has zero slope outside [floor, 1].
      if (grad_y_hat && raw >= kProbabilityFloor && raw <= 1.0) (*grad_y_hat)[i] = static_cast<T>(-target / p);
    }
  }
  double squared = 0.0;
  for (const auto& param : params) {
    const auto w = param.value->values();
    auto g = param.grad->values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      squared += static_cast<double>(w[i]) * static_cast<double>(w[i]);
      if (lambda != 0.0) g[i] += static_cast<T>(lambda * static_cast<double>(w[i]));
    }
  }
  r.regularizer = 0.5 * lambda * squared;
  r.loss = r.divergence + r.regularizer;
  return r;
}

template void validate_labels(const Tensor<float>&);
template void validate_labels(const Tensor<double>&);
template LossResult kl_loss(const Tensor<float>&, const Tensor<float>&, std::span<const ParamRef<float>>, double,
                            Tensor<float>*);
template LossResult kl_loss(const Tensor<double>&, const Tensor<double>&, std::span<const ParamRef<double>>,
                            double, Tensor<double>*);

}  // namespace sf::nn
