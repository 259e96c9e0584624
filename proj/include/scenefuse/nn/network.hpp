#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scenefuse/nn/layers.hpp"

namespace sf::nn {

/// A named tensor in a network's state (parameters and running statistics).
template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* value;
};

/// Sequential stack of layers.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  std::size_t layer_count() const noexcept { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

  /// Per-layer output shapes for a sample of shape `input`; throws shape
  /// error at the first layer that rejects its input.
  std::vector<Shape> layer_shapes(const Shape& input) const;
  Shape output_shape(const Shape& input) const;

  Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx);
  /// Gradient with respect to the network input. Parameter gradients are
  /// accumulated, so call `zero_grad` between steps.
  Tensor<T> backward(const Tensor<T>& grad_output);

  void zero_grad();
  void initialize(Rng& rng);

  std::vector<ParamRef<T>> parameters();
  /// Parameters followed by buffers, in layer order.
  std::vector<NamedTensor<T>> state();
  std::size_t parameter_count();

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace sf::nn
