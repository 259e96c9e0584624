#include "scenefuse/nn/trainer.hpp"

#include <cstring>
#include <numeric>

#include "scenefuse/nn/loss.hpp"
#include "scenefuse/nn/mixup.hpp"

namespace sf::nn {

void TrainingConfig::validate() const {
  if (!(l2 >= 0.0)) throw Error(ErrorKind::spec, "l2 coefficient must be >= 0");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::spec, "learning rate must be positive");
  if (epochs < 1) throw Error(ErrorKind::spec, "at least one epoch is required");
  if (batch_size < 1) throw Error(ErrorKind::spec, "batch size must be positive");
  if (mixup && !(mixup_alpha > 0.0)) throw Error(ErrorKind::spec, "mixup alpha must be positive");
}

template <typename T>
Tensor<T> one_hot(std::span<const int> labels, std::size_t classes) {
  Tensor<T> out({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw Error(ErrorKind::label, "class id " + std::to_string(labels[i]) + " outside [0, " +
                                        std::to_string(classes) + ")");
    }
    out[i * classes + static_cast<std::size_t>(labels[i])] = T{1};
  }
  return out;
}

template <typename T>
Tensor<T> gather(const Tensor<T>& batch, std::span<const std::size_t> indices) {
  Shape shape = batch.shape();
  const std::size_t n = shape.at(0);
  const std::size_t stride = n == 0 ? 0 : batch.size() / n;
  shape[0] = indices.size();
  Tensor<T> out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) throw Error(ErrorKind::shape, "sample index out of range");
    std::memcpy(out.data() + i * stride, batch.data() + indices[i] * stride, stride * sizeof(T));
  }
  return out;
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t samples, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw Error(ErrorKind::spec, "batch size must be positive");
  std::vector<std::size_t> order(samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = samples; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < samples; start += batch_size) {
    const std::size_t end = std::min(samples, start + batch_size);
    if (end - start == 1 && samples > 1) break;
    batches.emplace_back(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
  }
  return batches;
}

template <typename T>
TrainResult train(Network<T>& network, const LabeledData<T>& data, const TrainingConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  const std::size_t n = data.size();
  if (n == 0) throw Error(ErrorKind::data, "training set is empty");
  if (data.labels.rank() != 2 || data.labels.dim(0) != n) {
    throw Error(ErrorKind::shape, "labels " + shape_string(data.labels.shape()) + " do not match " +
                                      std::to_string(n) + " samples");
  }
  validate_labels(data.labels);

  Rng rng(config.seed);
  auto params = network.parameters();
  Adam<T> adam(params, AdamConfig{config.learning_rate});
  ForwardContext ctx{Mode::train, &rng, config.dropout};
  TrainResult result;
  Tensor<T> grad;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    std::size_t seen = 0;
    for (const auto& indices : shuffled_batches(n, config.batch_size, rng)) {
      Tensor<T> x = gather(data.inputs, indices);
      Tensor<T> y = gather(data.labels, indices);
      if (config.mixup && indices.size() >= 2) {
        const MixupDraw draw = draw_mixup(indices.size(), config.mixup_alpha, rng);
        std::tie(x, y) = mixup_batch(x, y, draw);
      }
      network.zero_grad();
      const Tensor<T> y_hat = network.forward(x, ctx);
      const LossResult loss = kl_loss<T>(y, y_hat, params, config.l2, &grad);
      network.backward(grad);
      adam.step();
      total += loss.loss;
      seen += indices.size();
    }
    result.epoch_loss.push_back(total / static_cast<double>(seen));
    if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
  }
  return result;
}

template <typename T>
Tensor<T> predict_probabilities(Network<T>& network, const Tensor<T>& inputs, std::size_t batch_size) {
  if (inputs.rank() == 0 || inputs.dim(0) == 0) throw Error(ErrorKind::data, "nothing to predict");
  if (batch_size == 0) throw Error(ErrorKind::spec, "batch size must be positive");
  const std::size_t n = inputs.dim(0);
  ForwardContext ctx{Mode::eval, nullptr, false};
  Tensor<T> out;
  std::vector<T> values;
  std::size_t classes = 0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, n - start));
    std::iota(idx.begin(), idx.end(), start);
    const Tensor<T> probs = network.forward(gather(inputs, idx), ctx);
    classes = probs.dim(1);
    values.insert(values.end(), probs.values().begin(), probs.values().end());
  }
  return Tensor<T>({n, classes}, std::move(values));
}

template <typename T>
fusion::Distribution predict_clip(Network<T>& network, const Tensor<T>& patches) {
  if (patches.rank() == 0 || patches.dim(0) == 0) throw Error(ErrorKind::data, "clip has no patches");
  const Tensor<T> probs = predict_probabilities(network, patches, patches.dim(0));
  const std::vector<double> rows(probs.values().begin(), probs.values().end());
  return fusion::mean_over_patches(rows, probs.dim(1));
}

#define SF_INSTANTIATE(T)                                                                                  \
  template Tensor<T> one_hot<T>(std::span<const int>, std::size_t);                                       \
  template Tensor<T> gather<T>(const Tensor<T>&, std::span<const std::size_t>);                           \
  template TrainResult train<T>(Network<T>&, const LabeledData<T>&, const TrainingConfig&,                \
                                const EpochCallback&);                                                     \
  template Tensor<T> predict_probabilities<T>(Network<T>&, const Tensor<T>&, std::size_t);                \
  template fusion::Distribution predict_clip<T>(Network<T>&, const Tensor<T>&);
SF_INSTANTIATE(float)
SF_INSTANTIATE(double)
#undef SF_INSTANTIATE

}  // namespace sf::nn
