#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sf::app {

inline constexpr std::array<std::string_view, 10> kSceneClasses = {
    "airport",       "bus",          "metro",           "metro_station",  "park",
    "public_square", "shopping_mall", "street_pedestrian", "street_traffic", "tram",
};

std::optional<int> class_index(std::string_view name) noexcept;

enum class MetaClass { indoor, outdoor, transportation };

std::string_view to_string(MetaClass meta) noexcept;
/// Throws label error for an index outside the vocabulary.
MetaClass meta_class(int scene_class);

enum class Split { train, eval };

std::string_view to_string(Split split) noexcept;
std::optional<Split> parse_split(std::string_view name) noexcept;

struct ManifestRow {
  std::filesystem::path path;  // as written in the file
  int label = 0;
  Split split = Split::train;

  /// File stem, used as the clip id everywhere downstream.
  std::string clip_id() const { return path.stem().string(); }
};

struct Manifest {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::vector<ManifestRow> rows;

  std::filesystem::path resolve(const ManifestRow& row) const;
  std::vector<ManifestRow> split(Split which) const;
};

/// CSV with header `path,label,split`. Format error on malformed lines,
/// label error for names outside the vocabulary, data error for duplicate
/// paths or duplicate clip ids.
Manifest parse_manifest(std::string_view text, std::filesystem::path base_dir);
Manifest read_manifest(const std::filesystem::path& path);
std::string encode_manifest(const Manifest& manifest);

}  // namespace sf::app
