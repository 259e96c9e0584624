#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "scenefuse/nn/network.hpp"

namespace sf::zoo {

enum class Family { vgg14, mlp };

std::string_view to_string(Family family) noexcept;

struct LayerSpec {
  nn::LayerKind kind;
  std::string name;
  std::size_t units = 0;  // conv output channels, dense outputs, BN channels
  double rate = 0.0;      // dropout
};

/// A row of the published layer table: the layers it groups end at
/// `last_layer`.
struct StageSpec {
  std::string label;
  std::size_t last_layer = 0;
};

struct ArchitectureSpec {
  Family family = Family::vgg14;
  std::size_t scale_divisor = 1;  // width scale s = 1 / scale_divisor
  nn::Shape input;
  std::size_t classes = 10;
  std::vector<LayerSpec> layers;
  std::vector<StageSpec> stages;

  /// "vgg14", "vgg14/8", "mlp", "mlp/64".
  std::string id() const;
};

inline constexpr std::size_t kSceneClasses = 10;

/// VGG14 ladder at width scale 1/`scale_divisor` (1, 2, 4 or 8). The input
/// must be square with sides divisible by 8; at full width it must be
/// 128x128x6, scaled variants accept 3 or 6 channels. Spec error otherwise.
ArchitectureSpec build_vgg14(const nn::Shape& input = {128, 128, 6}, std::size_t classes = kSceneClasses,
                             std::size_t scale_divisor = 1);

/// MLP head for d-dimensional embeddings at width scale 1/`scale_divisor`
/// (a power of two up to 1024). Spec error for d < 1.
ArchitectureSpec build_mlp(std::size_t input_dim, std::size_t classes = kSceneClasses,
                           std::size_t scale_divisor = 1);

/// Parses an identifier produced by `ArchitectureSpec::id` and builds it for
/// `input`. Spec error on an unknown identifier.
ArchitectureSpec build_from_id(std::string_view id, const nn::Shape& input, std::size_t classes = kSceneClasses);

/// Output shape of every layer, from the spec alone. Shape error where the
/// ladder does not connect.
std::vector<nn::Shape> infer_shapes(const ArchitectureSpec& spec);
/// Output shape at the end of each stage row.
std::vector<nn::Shape> stage_shapes(const ArchitectureSpec& spec);
/// Conv and dense layers.
std::size_t trainable_layer_count(const ArchitectureSpec& spec);
/// Trainable scalars (weights, biases, BN gamma and beta).
std::size_t parameter_count(const ArchitectureSpec& spec);

/// Layers constructed and Glorot-initialized from `seed`.
template <typename T>
nn::Network<T> instantiate(const ArchitectureSpec& spec, std::uint64_t seed);

extern template nn::Network<float> instantiate<float>(const ArchitectureSpec&, std::uint64_t);
extern template nn::Network<double> instantiate<double>(const ArchitectureSpec&, std::uint64_t);

}  // namespace sf::zoo
