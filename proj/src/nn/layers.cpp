#include "scenefuse/nn/layers.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <limits>

namespace sf::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void glorot_uniform(Tensor<T>& w, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : w.values()) v = static_cast<T>(dist(rng));
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::batch_norm: return "batch_norm";
    case LayerKind::relu: return "relu";
    case LayerKind::avg_pool: return "avg_pool";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::dense: return "dense";
    case LayerKind::softmax: return "softmax";
    case LayerKind::dropout: return "dropout";
  }
  return "unknown";
}

// ------------------------------------------------------------------ Layer

template <typename T>
void Layer<T>::missing_cache() const {
  throw Error(ErrorKind::state, "layer '" + name_ + "': backward without a train-mode forward");
}

template <typename T>
void Layer<T>::check_input(const Tensor<T>& input, std::size_t sample_rank) const {
  if (input.rank() != sample_rank + 1 || input.dim(0) == 0) {
    throw Error(ErrorKind::shape, "layer '" + name_ + "' expects a batch of rank-" +
                                      std::to_string(sample_rank) + " samples, got " +
                                      shape_string(input.shape()));
  }
  const Shape expected = output_shape(sample_shape(input));  // validates extents
  (void)expected;
}

// ---------------------------------------------------------------- Conv3x3

template <typename T>
Conv3x3<T>::Conv3x3(std::string name, std::size_t in_channels, std::size_t out_channels)
    : Layer<T>(std::move(name)),
      in_(in_channels),
      out_(out_channels),
      weight_({3, 3, in_channels, out_channels}),
      bias_({out_channels}),
      weight_grad_({3, 3, in_channels, out_channels}),
      bias_grad_({out_channels}) {}

template <typename T>
Shape Conv3x3<T>::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[2] != in_) {
    throw Error(ErrorKind::shape, "conv '" + this->name() + "' expects HxWx" + std::to_string(in_) +
                                      ", got " + shape_string(input));
  }
  return {input[0], input[1], out_};
}

template <typename T>
Tensor<T> Conv3x3<T>::forward(const Tensor<T>& input, ForwardContext& ctx) {
  this->check_input(input, 3);
  const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t k = 9 * in_;
  Tensor<T> columns({n * h * w, k});
  T* col = columns.data();
  const T* x = input.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t xx = 0; xx < w; ++xx) {
        T* row = col + ((b * h + y) * w + xx) * k;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const long sy = static_cast<long>(y) + static_cast<long>(ky) - 1;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const long sx = static_cast<long>(xx) + static_cast<long>(kx) - 1;
            T* dst = row + (ky * 3 + kx) * in_;
            if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) {
              std::fill(dst, dst + in_, T{0});
            } else {
              const T* src = x + ((b * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)) * in_;
              std::memcpy(dst, src, in_ * sizeof(T));
            }
          }
        }
      }
    }
  }
  Tensor<T> output({n, h, w, out_});
  MatrixMap<T> out(output.data(), static_cast<long>(n * h * w), static_cast<long>(out_));
  ConstMatrixMap<T> cols(columns.data(), static_cast<long>(n * h * w), static_cast<long>(k));
  ConstMatrixMap<T> weights(weight_.data(), static_cast<long>(k), static_cast<long>(out_));
  out.noalias() = cols * weights;
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.data(), static_cast<long>(out_));
  out.rowwise() += b;

  if (ctx.mode == Mode::train) {
    columns_ = std::move(columns);
    input_shape_ = input.shape();
  } else {
    columns_.reset();
  }
  return output;
}

template <typename T>
Tensor<T> Conv3x3<T>::backward(const Tensor<T>& grad_output) {
  if (!columns_) this->missing_cache();
  const std::size_t n = input_shape_[0], h = input_shape_[1], w = input_shape_[2];
  const std::size_t rows = n * h * w, k = 9 * in_;
  if (grad_output.shape() != Shape{n, h, w, out_}) {
    throw Error(ErrorKind::shape, "conv '" + this->name() + "' gradient has shape " +
                                      shape_string(grad_output.shape()));
  }
  ConstMatrixMap<T> dy(grad_output.data(), static_cast<long>(rows), static_cast<long>(out_));
  ConstMatrixMap<T> cols(columns_->data(), static_cast<long>(rows), static_cast<long>(k));
  MatrixMap<T> dw(weight_grad_.data(), static_cast<long>(k), static_cast<long>(out_));
  dw.noalias() += cols.transpose() * dy;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(bias_grad_.data(), static_cast<long>(out_));
  db += dy.colwise().sum();

  ConstMatrixMap<T> weights(weight_.data(), static_cast<long>(k), static_cast<long>(out_));
  RowMatrix<T> dcol = dy * weights.transpose();

  Tensor<T> grad_input(input_shape_);
  T* dx = grad_input.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t xx = 0; xx < w; ++xx) {
        const T* row = dcol.data() + ((b * h + y) * w + xx) * k;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const long sy = static_cast<long>(y) + static_cast<long>(ky) - 1;
          if (sy < 0 || sy >= static_cast<long>(h)) continue;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const long sx = static_cast<long>(xx) + static_cast<long>(kx) - 1;
            if (sx < 0 || sx >= static_cast<long>(w)) continue;
            T* dst = dx + ((b * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)) * in_;
            const T* src = row + (ky * 3 + kx) * in_;
            for (std::size_t c = 0; c < in_; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
  columns_.reset();
  return grad_input;
}

template <typename T>
std::vector<ParamRef<T>> Conv3x3<T>::params() {
  return {{this->name() + ".weight", &weight_, &weight_grad_},
          {this->name() + ".bias", &bias_, &bias_grad_}};
}

template <typename T>
void Conv3x3<T>::initialize(Rng& rng) {
  glorot_uniform(weight_, 9.0 * static_cast<double>(in_), 9.0 * static_cast<double>(out_), rng);
  bias_.fill(T{0});
}

// -------------------------------------------------------------- BatchNorm

template <typename T>
BatchNorm<T>::BatchNorm(std::string name, std::size_t channels)
    : Layer<T>(std::move(name)),
      channels_(channels),
      gamma_({channels}, T{1}),
      beta_({channels}),
      gamma_grad_({channels}),
      beta_grad_({channels}),
      running_mean_({channels}),
      running_var_({channels}, T{1}) {}

template <typename T>
Shape BatchNorm<T>::output_shape(const Shape& input) const {
  if (input.empty() || input.back() != channels_) {
    throw Error(ErrorKind::shape, "batch norm '" + this->name() + "' expects trailing extent " +
                                      std::to_string(channels_) + ", got " + shape_string(input));
  }
  return input;
}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& input, ForwardContext& ctx) {
  if (input.rank() < 2) {
    throw Error(ErrorKind::shape, "batch norm '" + this->name() + "' needs a batched input");
  }
  output_shape(sample_shape(input));
  const std::size_t c_count = channels_;
  const std::size_t m = input.size() / c_count;
  Tensor<T> output(input.shape());
  const T* x = input.data();
  T* y = output.data();

  if (ctx.mode == Mode::eval) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t c = 0; c < c_count; ++c) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(running_var_[c]) + kEpsilon);
        y[i * c_count + c] = static_cast<T>(gamma_[c] * (x[i * c_count + c] - running_mean_[c]) * inv + beta_[c]);
      }
    }
    normalized_.reset();
    return output;
  }

  if (input.dim(0) < 2) {
    throw Error(ErrorKind::degenerate_batch,
                "batch norm '" + this->name() + "' cannot use batch statistics of a single sample");
  }
  std::vector<double> mean(c_count, 0.0), var(c_count, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < c_count; ++c) mean[c] += x[i * c_count + c];
  }
  for (auto& v : mean) v /= static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < c_count; ++c) {
      const double d = x[i * c_count + c] - mean[c];
      var[c] += d * d;
    }
  }
  for (auto& v : var) v /= static_cast<double>(m);

  Tensor<T> normalized(input.shape());
  inv_std_.assign(c_count, T{0});
  for (std::size_t c = 0; c < c_count; ++c) inv_std_[c] = static_cast<T>(1.0 / std::sqrt(var[c] + kEpsilon));
  T* xhat = normalized.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < c_count; ++c) {
      const std::size_t j = i * c_count + c;
      xhat[j] = static_cast<T>((x[j] - mean[c]) * inv_std_[c]);
      y[j] = gamma_[c] * xhat[j] + beta_[c];
    }
  }
  for (std::size_t c = 0; c < c_count; ++c) {
    running_mean_[c] = static_cast<T>(kMomentum * running_mean_[c] + (1.0 - kMomentum) * mean[c]);
    running_var_[c] = static_cast<T>(kMomentum * running_var_[c] + (1.0 - kMomentum) * var[c]);
  }
  normalized_ = std::move(normalized);
  return output;
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& grad_output) {
  if (!normalized_) this->missing_cache();
  if (grad_output.shape() != normalized_->shape()) {
    throw Error(ErrorKind::shape, "batch norm '" + this->name() + "' gradient shape mismatch");
  }
  const std::size_t c_count = channels_;
  const std::size_t m = grad_output.size() / c_count;
  const T* dy = grad_output.data();
  const T* xhat = normalized_->data();
  std::vector<double> sum_dy(c_count, 0.0), sum_dy_xhat(c_count, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < c_count; ++c) {
      const std::size_t j = i * c_count + c;
      sum_dy[c] += dy[j];
      sum_dy_xhat[c] += dy[j] * xhat[j];
    }
  }
  for (std::size_t c = 0; c < c_count; ++c) {
    gamma_grad_[c] += static_cast<T>(sum_dy_xhat[c]);
    beta_grad_[c] += static_cast<T>(sum_dy[c]);
  }
  Tensor<T> grad_input(grad_output.shape());
  T* dx = grad_input.data();
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < c_count; ++c) {
      const std::size_t j = i * c_count + c;
      const double scale = static_cast<double>(gamma_[c]) * inv_std_[c];
      dx[j] = static_cast<T>(scale * (dy[j] - inv_m * sum_dy[c] - xhat[j] * inv_m * sum_dy_xhat[c]));
    }
  }
  normalized_.reset();
  return grad_input;
}

template <typename T>
std::vector<ParamRef<T>> BatchNorm<T>::params() {
  return {{this->name() + ".gamma", &gamma_, &gamma_grad_},
          {this->name() + ".beta", &beta_, &beta_grad_}};
}

template <typename T>
std::vector<BufferRef<T>> BatchNorm<T>::buffers() {
  return {{this->name() + ".running_mean", &running_mean_},
          {this->name() + ".running_var", &running_var_}};
}

// ------------------------------------------------------------------- Relu

template <typename T>
Tensor<T> Relu<T>::forward(const Tensor<T>& input, ForwardContext& ctx) {
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T{0} ? input[i] : T{0};
  if (ctx.mode == Mode::train) {
    input_ = input;
  } else {
    input_.reset();
  }
  return out;
}

template <typename T>
Tensor<T> Relu<T>::backward(const Tensor<T>& grad_output) {
  if (!input_) this->missing_cache();
  if (grad_output.shape() != input_->shape()) {
    throw Error(ErrorKind::shape, "relu '" + this->name() + "' gradient shape mismatch");
  }
  Tensor<T> grad(grad_output.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = (*input_)[i] > T{0} ? grad_output[i] : T{0};
  input_.reset();
  return grad;
}

// ------------------------------------------------------------- AvgPool2x2

template <typename T>
Shape AvgPool2x2<T>::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[0] % 2 != 0 || input[1] % 2 != 0 || input[0] == 0 || input[1] == 0) {
    throw Error(ErrorKind::shape, "avg pool '" + this->name() + "' needs even HxWxC, got " +
                                      shape_string(input));
  }
  return {input[0] / 2, input[1] / 2, input[2]};
}

template <typename T>
Tensor<T> AvgPool2x2<T>::forward(const Tensor<T>& input, ForwardContext& ctx) {
  this->check_input(input, 3);
  const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor<T> out({n, oh, ow, c});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        T* dst = out.data() + ((b * oh + y) * ow + x) * c;
        const T* r0 = input.data() + ((b * h + 2 * y) * w + 2 * x) * c;
        const T* r1 = r0 + w * c;
        for (std::size_t k = 0; k < c; ++k) {
          dst[k] = (r0[k] + r0[c + k] + r1[k] + r1[c + k]) * T(0.25);
        }
      }
    }
  }
  if (ctx.mode == Mode::train) {
    input_shape_ = input.shape();
  } else {
    input_shape_.reset();
  }
  return out;
}

template <typename T>
Tensor<T> AvgPool2x2<T>::backward(const Tensor<T>& grad_output) {
  if (!input_shape_) this->missing_cache();
  const Shape in = *input_shape_;
  const std::size_t n = in[0], h = in[1], w = in[2], c = in[3];
  const std::size_t oh = h / 2, ow = w / 2;
  if (grad_output.shape() != Shape{n, oh, ow, c}) {
    throw Error(ErrorKind::shape, "avg pool '" + this->name() + "' gradient shape mismatch");
  }
  Tensor<T> grad(in);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const T* g = grad_output.data() + ((b * oh + y) * ow + x) * c;
        T* r0 = grad.data() + ((b * h + 2 * y) * w + 2 * x) * c;
        T* r1 = r0 + w * c;
        for (std::size_t k = 0; k < c; ++k) {
          const T v = g[k] * T(0.25);
          r0[k] = v;
          r0[c + k] = v;
          r1[k] = v;
          r1[c + k] = v;
        }
      }
    }
  }
  input_shape_.reset();
  return grad;
}

// ---------------------------------------------------------- GlobalAvgPool

template <typename T>
Shape GlobalAvgPool<T>::output_shape(const Shape& input) const {
  if (input.size() != 3) {
    throw Error(ErrorKind::shape, "global pool '" + this->name() + "' needs HxWxC, got " +
                                      shape_string(input));
  }
  return {input[2]};
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& input, ForwardContext& ctx) {
  this->check_input(input, 3);
  const std::size_t n = input.dim(0), hw = input.dim(1) * input.dim(2), c = input.dim(3);
  Tensor<T> out({n, c});
  std::vector<double> acc(c);
  for (std::size_t b = 0; b < n; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* x = input.data() + b * hw * c;
    for (std::size_t i = 0; i < hw; ++i) {
      for (std::size_t k = 0; k < c; ++k) acc[k] += x[i * c + k];
    }
    for (std::size_t k = 0; k < c; ++k) out[b * c + k] = static_cast<T>(acc[k] / static_cast<double>(hw));
  }
  if (ctx.mode == Mode::train) {
    input_shape_ = input.shape();
  } else {
    input_shape_.reset();
  }
  return out;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& grad_output) {
  if (!input_shape_) this->missing_cache();
  const Shape in = *input_shape_;
  const std::size_t n = in[0], hw = in[1] * in[2], c = in[3];
  if (grad_output.shape() != Shape{n, c}) {
    throw Error(ErrorKind::shape, "global pool '" + this->name() + "' gradient shape mismatch");
  }
  Tensor<T> grad(in);
  const T scale = T(1) / static_cast<T>(hw);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < hw; ++i) {
      for (std::size_t k = 0; k < c; ++k) grad[(b * hw + i) * c + k] = grad_output[b * c + k] * scale;
    }
  }
  input_shape_.reset();
  return grad;
}

// ------------------------------------------------------------------ Dense

template <typename T>
Dense<T>::Dense(std::string name, std::size_t in_features, std::size_t out_features)
    : Layer<T>(std::move(name)),
      in_(in_features),
      out_(out_features),
      weight_({in_features, out_features}),
      bias_({out_features}),
      weight_grad_({in_features, out_features}),
      bias_grad_({out_features}) {}

template <typename T>
Shape Dense<T>::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != in_) {
    throw Error(ErrorKind::shape, "dense '" + this->name() + "' expects " + std::to_string(in_) +
                                      " features, got " + shape_string(input));
  }
  return {out_};
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& input, ForwardContext& ctx) {
  this->check_input(input, 1);
  const std::size_t n = input.dim(0);
  Tensor<T> output({n, out_});
  MatrixMap<T> y(output.data(), static_cast<long>(n), static_cast<long>(out_));
  ConstMatrixMap<T> x(input.data(), static_cast<long>(n), static_cast<long>(in_));
  ConstMatrixMap<T> w(weight_.data(), static_cast<long>(in_), static_cast<long>(out_));
  y.noalias() = x * w;
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.data(), static_cast<long>(out_));
  y.rowwise() += b;
  if (ctx.mode == Mode::train) {
    input_ = input;
  } else {
    input_.reset();
  }
  return output;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_output) {
  if (!input_) this->missing_cache();
  const std::size_t n = input_->dim(0);
  if (grad_output.shape() != Shape{n, out_}) {
    throw Error(ErrorKind::shape, "dense '" + this->name() + "' gradient shape mismatch");
  }
  ConstMatrixMap<T> dy(grad_output.data(), static_cast<long>(n), static_cast<long>(out_));
  ConstMatrixMap<T> x(input_->data(), static_cast<long>(n), static_cast<long>(in_));
  MatrixMap<T> dw(weight_grad_.data(), static_cast<long>(in_), static_cast<long>(out_));
  dw.noalias() += x.transpose() * dy;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(bias_grad_.data(), static_cast<long>(out_));
  db += dy.colwise().sum();
  Tensor<T> grad_input({n, in_});
  MatrixMap<T> dx(grad_input.data(), static_cast<long>(n), static_cast<long>(in_));
  ConstMatrixMap<T> w(weight_.data(), static_cast<long>(in_), static_cast<long>(out_));
  dx.noalias() = dy * w.transpose();
  input_.reset();
  return grad_input;
}

template <typename T>
std::vector<ParamRef<T>> Dense<T>::params() {
  return {{this->name() + ".weight", &weight_, &weight_grad_},
          {this->name() + ".bias", &bias_, &bias_grad_}};
}

template <typename T>
void Dense<T>::initialize(Rng& rng) {
  glorot_uniform(weight_, static_cast<double>(in_), static_cast<double>(out_), rng);
  bias_.fill(T{0});
}

// ---------------------------------------------------------------- Softmax

template <typename T>
Shape Softmax<T>::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] == 0) {
    throw Error(ErrorKind::shape, "softmax '" + this->name() + "' needs a vector, got " +
                                      shape_string(input));
  }
  return input;
}

template <typename T>
Tensor<T> Softmax<T>::forward(const Tensor<T>& input, ForwardContext& ctx) {
  this->check_input(input, 1);
  const std::size_t n = input.dim(0), c = input.dim(1);
  Tensor<T> out(input.shape());
  for (std::size_t b = 0; b < n; ++b) {
    const T* x = input.data() + b * c;
    T* y = out.data() + b * c;
    const T peak = *std::max_element(x, x + c);
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double e = std::exp(static_cast<double>(x[k] - peak));
      y[k] = static_cast<T>(e);
      total += e;
    }
    // Floored at the smallest normal value so outputs stay strictly positive
    // when a logit spread exceeds the exponent range.
    for (std::size_t k = 0; k < c; ++k) {
      y[k] = std::max(static_cast<T>(y[k] / total), std::numeric_limits<T>::min());
    }
  }
  if (ctx.mode == Mode::train) {
    output_ = out;
  } else {
    output_.reset();
  }
  return out;
}

template <typename T>
Tensor<T> Softmax<T>::backward(const Tensor<T>& grad_output) {
  if (!output_) this->missing_cache();
  if (grad_output.shape() != output_->shape()) {
    throw Error(ErrorKind::shape, "softmax '" + this->name() + "' gradient shape mismatch");
  }
  const std::size_t n = output_->dim(0), c = output_->dim(1);
  Tensor<T> grad(output_->shape());
  for (std::size_t b = 0; b < n; ++b) {
    const T* s = output_->data() + b * c;
    const T* g = grad_output.data() + b * c;
    double dot = 0.0;
    for (std::size_t k = 0; k < c; ++k) dot += static_cast<double>(s[k]) * g[k];
    for (std::size_t k = 0; k < c; ++k) grad[b * c + k] = static_cast<T>(s[k] * (g[k] - dot));
  }
  output_.reset();
  return grad;
}

// ---------------------------------------------------------------- Dropout

template <typename T>
Dropout<T>::Dropout(std::string name, double rate) : Layer<T>(std::move(name)), rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorKind::spec, "dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& input, ForwardContext& ctx) {
  if (ctx.mode == Mode::eval) {
    mask_.reset();
    return input;
  }
  Tensor<T> mask(input.shape(), T{1});
  if (ctx.dropout && rate_ > 0.0) {
    if (ctx.rng == nullptr) {
      throw Error(ErrorKind::state, "dropout '" + this->name() + "' needs a random generator in train mode");
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& m : mask.values()) m = u(*ctx.rng) < rate_ ? T{0} : keep_scale;
  }
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] * mask[i];
  mask_ = std::move(mask);
  return out;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_output) {
  if (!mask_) this->missing_cache();
  if (grad_output.shape() != mask_->shape()) {
    throw Error(ErrorKind::shape, "dropout '" + this->name() + "' gradient shape mismatch");
  }
  Tensor<T> grad(grad_output.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = grad_output[i] * (*mask_)[i];
  mask_.reset();
  return grad;
}

template class Layer<float>;
template class Layer<double>;
template class Conv3x3<float>;
template class Conv3x3<double>;
template class BatchNorm<float>;
template class BatchNorm<double>;
template class Relu<float>;
template class Relu<double>;
template class AvgPool2x2<float>;
template class AvgPool2x2<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;
template class Dense<float>;
template class Dense<double>;
template class Softmax<float>;
template class Softmax<double>;
template class Dropout<float>;
template class Dropout<double>;

}  // namespace sf::nn
