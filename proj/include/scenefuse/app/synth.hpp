#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "scenefuse/app/manifest.hpp"
#include "scenefuse/audio/wav.hpp"
#include "scenefuse/embedding/embedding.hpp"

namespace sf::app {

struct SynthConfig {
  std::size_t classes = 4;           // first N names of the vocabulary
  std::size_t clips_per_class = 75;  // train + eval
  std::size_t eval_per_class = 25;
  std::uint64_t seed = 0;
  double duration_seconds = 10.0;
  int sample_rate = 48000;
  std::uint32_t embedding_dim = 2048;
  std::string embedding_source = "cnn14";  // "synthetic" when the dim does not match
  double embedding_noise = 3.0;  // within-class std per dimension
  bool audio = true;
};

struct SynthReport {
  Manifest manifest;
  std::filesystem::path manifest_path;
  std::filesystem::path embeddings_path;
  std::size_t wav_count = 0;
};

/// Stereo clip with the class's signature: a harmonic tone at a
/// class-specific pitch with class-specific amplitude modulation over
/// broadband noise, jittered per clip from `seed`.
audio::AudioClip synth_clip(int label, std::uint64_t seed, double duration_seconds, int sample_rate);

/// Gaussian clusters, one random centroid per class, one labeled row per
/// manifest clip.
embedding::EmbeddingSet synth_embeddings(const Manifest& manifest, const SynthConfig& config);

/// Writes `audio/*.wav`, `manifest.csv` and `embeddings.sfemb` under `out`.
/// Spec error for an empty or oversized class count or eval share, IO error
/// when `out` is not writable.
SynthReport synthesize(const SynthConfig& config, const std::filesystem::path& out);

}  // namespace sf::app
