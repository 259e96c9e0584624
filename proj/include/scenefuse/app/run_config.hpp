#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scenefuse/nn/trainer.hpp"

namespace sf::app {

/// Every knob of a command run. Written next to each command's outputs as
/// plain `key=value` lines.
struct RunConfig {
  std::string command;
  std::filesystem::path manifest;
  std::filesystem::path out = "out";
  std::filesystem::path features;    // feature root, defaults next to the manifest
  std::filesystem::path embeddings;  // SFEMB file for the mlp path
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> inputs;  // probability CSVs for fuse / eval / early
  std::string kind = "mel";
  std::string arch = "vgg14";
  std::size_t scale_divisor = 1;
  std::size_t pool = 0;  // patch pooling factor, 0 picks 1 at full width and 4 otherwise
  std::string strategy = "mean";
  std::string split = "eval";
  std::string name;  // framework name, defaults to the kind or embedding source
  std::size_t threads = 0;
  nn::TrainingConfig training;

  std::string to_text() const;
  /// Inverse of `to_text`. Format error on unknown keys or bad values.
  static RunConfig from_text(std::string_view text);

  std::size_t effective_pool() const { return pool ? pool : (scale_divisor == 1 ? 1 : 4); }
};

/// "1", "1/8" or "0.125" to the divisor 8. Spec error for anything that is
/// not the reciprocal of a positive integer.
std::size_t parse_scale(std::string_view text);

}  // namespace sf::app
