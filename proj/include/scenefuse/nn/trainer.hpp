#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scenefuse/fusion/fusion.hpp"
#include "scenefuse/nn/adam.hpp"
#include "scenefuse/nn/network.hpp"

namespace sf::nn {

struct TrainingConfig {
  double l2 = 1e-4;
  double learning_rate = 1e-4;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double mixup_alpha = 0.4;
  bool mixup = true;
  bool dropout = true;
  std::uint64_t seed = 0;

  /// Throws spec error for lambda < 0, zero epochs or batch size, or a
  /// non-positive alpha with mixup on.
  void validate() const;
};

/// Samples stacked along the first axis and their label distributions (N x C).
template <typename T>
struct LabeledData {
  Tensor<T> inputs;
  Tensor<T> labels;

  std::size_t size() const { return inputs.rank() == 0 ? 0 : inputs.dim(0); }
};

struct TrainResult {
  /// Per epoch: summed loss over all batches divided by the samples seen.
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// One-hot rows for `labels` over `classes`; label error for ids out of range.
template <typename T>
Tensor<T> one_hot(std::span<const int> labels, std::size_t classes);

/// Samples `indices` of `batch` in that order.
template <typename T>
Tensor<T> gather(const Tensor<T>& batch, std::span<const std::size_t> indices);

/// Epoch order: a seeded permutation cut into consecutive batches. A
/// trailing batch of one sample is dropped when more than one sample exists,
/// since neither batch statistics nor mixup are defined for it.
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t samples, std::size_t batch_size, Rng& rng);

/// Mini-batch Adam on the KL + L2 objective. Deterministic in (network
/// initial state, data, config). Throws data error on an empty dataset.
template <typename T>
TrainResult train(Network<T>& network, const LabeledData<T>& data, const TrainingConfig& config,
                  const EpochCallback& on_epoch = {});

/// Eval-mode softmax outputs (N x C), evaluated `batch_size` samples at a time.
template <typename T>
Tensor<T> predict_probabilities(Network<T>& network, const Tensor<T>& inputs, std::size_t batch_size = 32);

/// Mean of the per-patch eval outputs. Throws data error for zero patches.
template <typename T>
fusion::Distribution predict_clip(Network<T>& network, const Tensor<T>& patches);

}  // namespace sf::nn
