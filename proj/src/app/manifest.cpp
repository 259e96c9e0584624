#include "scenefuse/app/manifest.hpp"

#include <set>

#include "scenefuse/common/error.hpp"
#include "scenefuse/fusion/prob_io.hpp"

namespace sf::app {

std::optional<int> class_index(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kSceneClasses.size(); ++i) {
    if (kSceneClasses[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::string_view to_string(MetaClass meta) noexcept {
  switch (meta) {
    case MetaClass::indoor: return "indoor";
    case MetaClass::outdoor: return "outdoor";
    case MetaClass::transportation: return "transportation";
  }
  return "unknown";
}

MetaClass meta_class(int scene_class) {
  static constexpr MetaClass kMap[] = {
      MetaClass::indoor,  MetaClass::transportation, MetaClass::transportation, MetaClass::indoor,
      MetaClass::outdoor, MetaClass::outdoor,        MetaClass::indoor,         MetaClass::outdoor,
      MetaClass::outdoor, MetaClass::transportation,
  };
  if (scene_class < 0 || scene_class >= 10) {
    throw Error(ErrorKind::label, "class id " + std::to_string(scene_class) + " has no meta-class");
  }
  return kMap[scene_class];
}

std::string_view to_string(Split split) noexcept { return split == Split::train ? "train" : "eval"; }

std::optional<Split> parse_split(std::string_view name) noexcept {
  if (name == "train") return Split::train;
  if (name == "eval" || name == "test" || name == "evaluate") return Split::eval;
  return std::nullopt;
}

std::filesystem::path Manifest::resolve(const ManifestRow& row) const {
  return row.path.is_absolute() ? row.path : base_dir / row.path;
}

std::vector<ManifestRow> Manifest::split(Split which) const {
  std::vector<ManifestRow> out;
  for (const auto& row : rows) {
    if (row.split == which) out.push_back(row);
  }
  return out;
}

Manifest parse_manifest(std::string_view text, std::filesystem::path base_dir) {
  Manifest m;
  m.base_dir = std::move(base_dir);
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool header = true;
  std::set<std::string> paths, ids;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto where = "manifest line " + std::to_string(line_no) + ": ";
    if (header) {
      if (line != "path,label,split") throw Error(ErrorKind::format, where + "expected header 'path,label,split'");
      header = false;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
      throw Error(ErrorKind::format, where + "expected three fields");
    }
    ManifestRow row;
    row.path = std::string(line.substr(0, c1));
    if (row.path.empty()) throw Error(ErrorKind::format, where + "empty path");
    const auto label = class_index(line.substr(c1 + 1, c2 - c1 - 1));
    if (!label) {
      throw Error(ErrorKind::label, where + "unknown scene label '" + std::string(line.substr(c1 + 1, c2 - c1 - 1)) + "'");
    }
    row.label = *label;
    const auto split = parse_split(line.substr(c2 + 1));
    if (!split) throw Error(ErrorKind::format, where + "split must be 'train' or 'eval'");
    row.split = *split;
    if (!paths.insert(row.path.generic_string()).second) {
      throw Error(ErrorKind::data, where + "duplicate path '" + row.path.generic_string() + "'");
    }
    if (!ids.insert(row.clip_id()).second) {
      throw Error(ErrorKind::data, where + "clip id '" + row.clip_id() + "' is not unique");
    }
    m.rows.push_back(std::move(row));
  }
  if (header) throw Error(ErrorKind::format, "manifest is missing its header");
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(fusion::read_text_file(path), path.parent_path());
}

std::string encode_manifest(const Manifest& manifest) {
  std::string out = "path,label,split\n";
  for (const auto& row : manifest.rows) {
    out += row.path.generic_string() + "," + std::string(kSceneClasses.at(static_cast<std::size_t>(row.label))) +
           "," + std::string(to_string(row.split)) + "\n";
  }
  return out;
}

}  // namespace sf::app
