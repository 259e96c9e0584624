#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace sf::audio {

/// Stereo clip with samples in [-1, 1]. Mono sources are duplicated into
/// both channels on load.
struct AudioClip {
  std::array<std::vector<float>, 2> channels;
  int sample_rate = 48000;

  std::size_t frames() const noexcept { return channels[0].size(); }
  double duration() const noexcept {
    return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
  }

  /// Throws shape error on mismatched channel lengths and format error on
  /// non-finite samples.
  void validate() const;
};

enum class WavEncoding { pcm16, float32 };

/// Parses RIFF/WAVE PCM 16-bit or IEEE float 32-bit, 1 or 2 channels.
/// Throws format error on a malformed container and unsupported-codec error
/// for any other encoding or channel count.
AudioClip parse_wav(std::span<const std::uint8_t> bytes);
AudioClip load_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding encoding = WavEncoding::pcm16);
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::pcm16);

}  // namespace sf::audio
