#include "scenefuse/nn/adam.hpp"

#include <cmath>

namespace sf::nn {

template <typename T>
Adam<T>::Adam(std::vector<ParamRef<T>> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate > 0.0) || !(config_.beta1 >= 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 >= 0.0 && config_.beta2 < 1.0) || !(config_.epsilon > 0.0)) {
    throw Error(ErrorKind::spec, "invalid Adam hyperparameters");
  }
  for (const auto& p : params_) {
    if (p.grad->shape() != p.value->shape()) {
      throw Error(ErrorKind::shape, "parameter '" + p.name + "' has a gradient of a different shape");
    }
    m_.emplace_back(p.value->shape());
    v_.emplace_back(p.value->shape());
  }
}

template <typename T>
void Adam<T>::step() {
  for (const auto& p : params_) {
    if (!p.grad->all_finite()) throw Error(ErrorKind::numeric, "non-finite gradient in '" + p.name + "'");
  }
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = config_.learning_rate, eps = config_.epsilon;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i].value->values();
    const auto g = params_[i].grad->values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k];
      const double mk = b1 * m[k] + (1.0 - b1) * gk;
      const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      w[k] = static_cast<T>(w[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + eps));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace sf::nn
