#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scenefuse/zoo/architecture.hpp"

namespace sf::zoo {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Per-input-channel normalization applied before the network. Empty when
/// the model consumes raw inputs.
struct NormalizationStats {
  std::vector<float> mean;
  std::vector<float> std;
};

struct CheckpointTensor {
  std::string name;
  nn::Shape dims;
  std::vector<float> data;
};

struct Model {
  ArchitectureSpec arch;
  nn::Network<float> network;
  NormalizationStats norm;
};

/// Layout: "SFCKPT\0", u32 version, u32 tensor count, then per tensor u32
/// name length, name, u32 rank, u32 dims, f32 payload. The architecture id,
/// input dims, class count and normalization stats travel as extra tensors.
std::vector<std::uint8_t> encode_checkpoint(const ArchitectureSpec& arch, nn::Network<float>& network,
                                            const NormalizationStats& norm);

/// Raw tensor list. Format error on bad magic or version, corruption error
/// on truncation or trailing bytes.
std::vector<CheckpointTensor> decode_checkpoint_tensors(std::span<const std::uint8_t> bytes);

/// Rebuilds the recorded architecture and loads its state. Corruption error
/// if the tensors do not match that architecture.
Model decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Copies matching state into `network`. Shape error on missing, extra or
/// differently shaped tensors.
void load_state(nn::Network<float>& network, std::span<const CheckpointTensor> tensors);

void save_checkpoint(const std::filesystem::path& path, const ArchitectureSpec& arch, nn::Network<float>& network,
                     const NormalizationStats& norm);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace sf::zoo
