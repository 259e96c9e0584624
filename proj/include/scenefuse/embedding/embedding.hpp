#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scenefuse/nn/trainer.hpp"

namespace sf::embedding {

inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr int kUnlabeled = -1;

struct EmbeddingRow {
  std::string clip_id;
  std::vector<float> vector;
  int label = kUnlabeled;
};

struct EmbeddingSet {
  std::string source;
  std::uint32_t dim = 0;
  std::vector<EmbeddingRow> rows;

  std::size_t labeled_count() const;
  /// Throws provenance error when a known source has the wrong dim, shape
  /// error when a row's length differs from `dim`, data error on duplicate
  /// clip ids or non-finite values. Returns warnings (unknown source).
  std::vector<std::string> validate() const;
};

/// Embedding length published for a pretrained extractor, matched
/// case-insensitively; nullopt for names outside the two tables.
std::optional<std::uint32_t> known_source_dim(std::string_view source);

/// Layout: "SFEMB\0", u32 version, u16 source length, source, u32 dim,
/// u32 rows, then per row u32 id length, id, f32[dim], i32 label.
std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set);
/// Format error on bad magic or version, corruption error on truncation or
/// trailing bytes, then `validate`. Warnings are appended to `warnings`.
EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings = nullptr);

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);
EmbeddingSet read_embeddings(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Row indices of the labeled rows, shuffled under `seed` and cut into
/// batches of `batch_size` (the last may be shorter). Data error when no
/// row is labeled.
std::vector<std::vector<std::size_t>> to_batches(const EmbeddingSet& set, std::size_t batch_size,
                                                 std::uint64_t seed);

/// Labeled rows as an (N x dim) input tensor with one-hot labels.
nn::LabeledData<float> to_labeled_data(const EmbeddingSet& set, std::size_t classes);
/// All rows as an (N x dim) tensor, in file order.
nn::Tensor<float> to_inputs(const EmbeddingSet& set);

}  // namespace sf::embedding
