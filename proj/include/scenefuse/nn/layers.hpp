#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "scenefuse/nn/tensor.hpp"

namespace sf::nn {

enum class LayerKind {
  conv3x3,
  batch_norm,
  relu,
  avg_pool,
  global_avg_pool,
  dense,
  softmax,
  dropout,
};

std::string_view to_string(LayerKind kind) noexcept;

enum class Mode { train, eval };

using Rng = std::mt19937_64;

struct ForwardContext {
  Mode mode = Mode::eval;
  Rng* rng = nullptr;       // required by dropout in train mode
  bool dropout = true;      // train-mode dropout switch
};

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

template <typename T>
struct BufferRef {
  std::string name;
  Tensor<T>* value;
};

/// One stage of the fixed layer vocabulary. Shapes passed to
/// `output_shape` exclude the batch extent; `forward` / `backward` take
/// batched tensors. `forward` in train mode caches what `backward` needs.
template <typename T>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  virtual LayerKind kind() const noexcept = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx) = 0;
  /// Throws state error if no train-mode forward preceded the call.
  virtual Tensor<T> backward(const Tensor<T>& grad_output) = 0;

  virtual std::vector<ParamRef<T>> params() { return {}; }
  virtual std::vector<BufferRef<T>> buffers() { return {}; }
  virtual void initialize(Rng&) {}

  const std::string& name() const noexcept { return name_; }

 protected:
  [[noreturn]] void missing_cache() const;
  void check_input(const Tensor<T>& input, std::size_t sample_rank) const;

 private:
  std::string name_;
};

/// 3x3 convolution, same padding, stride 1, over (H, W, C) samples.
/// Weights are laid out (ky, kx, in, out).
template <typename T>
class Conv3x3 final : public Layer<T> {
 public:
  Conv3x3(std::string name, std::size_t in_channels, std::size_t out_channels);

  LayerKind kind() const noexcept override { return LayerKind::conv3x3; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  std::vector<ParamRef<T>> params() override;
  void initialize(Rng& rng) override;

  Tensor<T>& weight() noexcept { return weight_; }
  Tensor<T>& bias() noexcept { return bias_; }

 private:
  std::size_t in_, out_;
  Tensor<T> weight_, bias_, weight_grad_, bias_grad_;
  std::optional<Tensor<T>> columns_;
  Shape input_shape_;
};

/// Batch normalization over the trailing (channel) axis. Train mode uses
/// batch statistics and updates running statistics with momentum 0.9.
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.9;

  BatchNorm(std::string name, std::size_t channels);

  LayerKind kind() const noexcept override { return LayerKind::batch_norm; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  std::vector<ParamRef<T>> params() override;
  std::vector<BufferRef<T>> buffers() override;

  Tensor<T>& gamma() noexcept { return gamma_; }
  Tensor<T>& beta() noexcept { return beta_; }
  Tensor<T>& running_mean() noexcept { return running_mean_; }
  Tensor<T>& running_var() noexcept { return running_var_; }

 private:
  std::size_t channels_;
  Tensor<T> gamma_, beta_, gamma_grad_, beta_grad_, running_mean_, running_var_;
  std::optional<Tensor<T>> normalized_;
  std::vector<T> inv_std_;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  LayerKind kind() const noexcept override { return LayerKind::relu; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

 private:
  std::optional<Tensor<T>> input_;
};

/// 2x2 average pooling, stride 2.
template <typename T>
class AvgPool2x2 final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  LayerKind kind() const noexcept override { return LayerKind::avg_pool; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

 private:
  std::optional<Shape> input_shape_;
};

/// (H, W, C) -> (C).
template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  LayerKind kind() const noexcept override { return LayerKind::global_avg_pool; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

 private:
  std::optional<Shape> input_shape_;
};

/// Fully connected layer, weights (in, out).
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::string name, std::size_t in_features, std::size_t out_features);

  LayerKind kind() const noexcept override { return LayerKind::dense; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;
  std::vector<ParamRef<T>> params() override;
  void initialize(Rng& rng) override;

  Tensor<T>& weight() noexcept { return weight_; }
  Tensor<T>& bias() noexcept { return bias_; }

 private:
  std::size_t in_, out_;
  Tensor<T> weight_, bias_, weight_grad_, bias_grad_;
  std::optional<Tensor<T>> input_;
};

template <typename T>
class Softmax final : public Layer<T> {
 public:
  using Layer<T>::Layer;
  LayerKind kind() const noexcept override { return LayerKind::softmax; }
  Shape output_shape(const Shape& input) const override;
  Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

 private:
  std::optional<Tensor<T>> output_;
};

/// Inverted dropout: active only in train mode, survivors scaled by
/// 1 / (1 - rate).
template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(std::string name, double rate);

  LayerKind kind() const noexcept override { return LayerKind::dropout; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor<T> forward(const Tensor<T>& input, ForwardContext& ctx) override;
  Tensor<T> backward(const Tensor<T>& grad_output) override;

  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  std::optional<Tensor<T>> mask_;
};

extern template class Layer<float>;
extern template class Layer<double>;
extern template class Conv3x3<float>;
extern template class Conv3x3<double>;
extern template class BatchNorm<float>;
extern template class BatchNorm<double>;
extern template class Relu<float>;
extern template class Relu<double>;
extern template class AvgPool2x2<float>;
extern template class AvgPool2x2<double>;
extern template class GlobalAvgPool<float>;
extern template class GlobalAvgPool<double>;
extern template class Dense<float>;
extern template class Dense<double>;
extern template class Softmax<float>;
extern template class Softmax<double>;
extern template class Dropout<float>;
extern template class Dropout<double>;

}  // namespace sf::nn
