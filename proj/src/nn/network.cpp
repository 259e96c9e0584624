#include "scenefuse/nn/network.hpp"

namespace sf::nn {

template <typename T>
std::vector<Shape> Network<T>::layer_shapes(const Shape& input) const {
  std::vector<Shape> shapes;
  Shape current = input;
  for (const auto& layer : layers_) {
    current = layer->output_shape(current);
    shapes.push_back(current);
  }
  return shapes;
}

template <typename T>
Shape Network<T>::output_shape(const Shape& input) const {
  const auto shapes = layer_shapes(input);
  return shapes.empty() ? input : shapes.back();
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& input, ForwardContext& ctx) {
  Tensor<T> x = input;
  for (auto& layer : layers_) x = layer->forward(x, ctx);
  return x;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_output) {
  Tensor<T> g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto& p : parameters()) p.grad->fill(T{0});
}

template <typename T>
void Network<T>::initialize(Rng& rng) {
  for (auto& layer : layers_) layer->initialize(rng);
}

template <typename T>
std::vector<ParamRef<T>> Network<T>::parameters() {
  std::vector<ParamRef<T>> out;
  for (auto& layer : layers_) {
    for (auto& p : layer->params()) out.push_back(std::move(p));
  }
  return out;
}

template <typename T>
std::vector<NamedTensor<T>> Network<T>::state() {
  std::vector<NamedTensor<T>> out;
  for (auto& layer : layers_) {
    for (auto& p : layer->params()) out.push_back({std::move(p.name), p.value});
    for (auto& b : layer->buffers()) out.push_back({std::move(b.name), b.value});
  }
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.value->size();
  return n;
}

template class Network<float>;
template class Network<double>;

}  // namespace sf::nn
