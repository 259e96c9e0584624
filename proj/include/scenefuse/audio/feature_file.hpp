#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "scenefuse/audio/features.hpp"

namespace sf::audio {

/// Binary spectrogram file: "SFTEN\0", u32 version = 1, u8 kind,
/// u32 dims[3] = (128, 704, 6), then f32 payload (bins, frames, channels).
inline constexpr std::uint32_t kFeatureFileVersion = 1;

std::vector<std::uint8_t> encode_feature_file(const SpectrogramTensor& tensor);
SpectrogramTensor decode_feature_file(std::span<const std::uint8_t> bytes);

void write_feature_file(const std::filesystem::path& path, const SpectrogramTensor& tensor);
SpectrogramTensor read_feature_file(const std::filesystem::path& path);

}  // namespace sf::audio
