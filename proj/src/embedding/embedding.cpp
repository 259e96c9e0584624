#include "scenefuse/embedding/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "scenefuse/common/binary_io.hpp"

namespace sf::embedding {

namespace {

constexpr std::string_view kMagic{"SFEMB\0", 6};

struct KnownSource {
  std::string_view name;
  std::uint32_t dim;
};

// Audio extractors, then image backbones.
constexpr KnownSource kKnownSources[] = {
    {"cnn14", 2048},    {"mobilenetv1", 1024}, {"res1dnet30", 2048},  {"resnet38", 2048},
    {"wavegram", 2048}, {"xception", 2048},    {"vgg19", 4096},       {"resnet50", 2048},
    {"inceptionv3", 2048}, {"mobilenetv2", 1280}, {"densenet121", 1024}, {"nasnetlarge", 4032},
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::optional<std::uint32_t> known_source_dim(std::string_view source) {
  const std::string key = lower(source);
  for (const auto& k : kKnownSources) {
    if (k.name == key) return k.dim;
  }
  return std::nullopt;
}

std::size_t EmbeddingSet::labeled_count() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const EmbeddingRow& r) { return r.label != kUnlabeled; }));
}

std::vector<std::string> EmbeddingSet::validate() const {
  std::vector<std::string> warnings;
  if (const auto expected = known_source_dim(source)) {
    if (*expected != dim) {
      throw Error(ErrorKind::provenance, "source '" + source + "' produces " + std::to_string(*expected) +
                                             "-dim embeddings, file declares " + std::to_string(dim));
    }
  } else {
    warnings.push_back("unknown embedding source '" + source + "', dim " + std::to_string(dim) + " not checked");
  }
  std::unordered_set<std::string_view> ids;
  for (const auto& row : rows) {
    if (row.vector.size() != dim) {
      throw Error(ErrorKind::shape, "row '" + row.clip_id + "' has " + std::to_string(row.vector.size()) +
                                        " values, expected " + std::to_string(dim));
    }
    if (!ids.insert(row.clip_id).second) throw Error(ErrorKind::data, "duplicate clip id '" + row.clip_id + "'");
    if (row.label < kUnlabeled) throw Error(ErrorKind::data, "row '" + row.clip_id + "' has a negative label");
    if (!std::all_of(row.vector.begin(), row.vector.end(), [](float v) { return std::isfinite(v); })) {
      throw Error(ErrorKind::data, "row '" + row.clip_id + "' has non-finite values");
    }
  }
  return warnings;
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
  set.validate();
  if (set.source.size() > 0xFFFF) throw Error(ErrorKind::data, "source name too long");
  ByteWriter out;
  out.put_bytes(kMagic);
  out.put<std::uint32_t>(kEmbeddingVersion);
  out.put<std::uint16_t>(static_cast<std::uint16_t>(set.source.size()));
  out.put_bytes(set.source);
  out.put<std::uint32_t>(set.dim);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(set.rows.size()));
  for (const auto& row : set.rows) {
    out.put<std::uint32_t>(static_cast<std::uint32_t>(row.clip_id.size()));
    out.put_bytes(row.clip_id);
    out.put_array(std::span<const float>(row.vector));
    out.put<std::int32_t>(row.label);
  }
  return out.take();
}

EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings) {
  if (bytes.size() < kMagic.size() + 4) throw Error(ErrorKind::format, "file too small to be an embedding file");
  ByteReader in(bytes, ErrorKind::corruption);
  if (in.get_string(kMagic.size()) != kMagic) throw Error(ErrorKind::format, "not an embedding file (bad magic)");
  const auto version = in.get<std::uint32_t>();
  if (version != kEmbeddingVersion) {
    throw Error(ErrorKind::format, "unsupported embedding file version " + std::to_string(version));
  }
  EmbeddingSet set;
  set.source = in.get_string(in.get<std::uint16_t>());
  set.dim = in.get<std::uint32_t>();
  const auto count = in.get<std::uint32_t>();
  // Each row needs at least its length prefix, vector and label.
  if (static_cast<std::uint64_t>(count) * (8 + 4ull * set.dim) > in.remaining()) {
    throw Error(ErrorKind::corruption, "row count exceeds the file size");
  }
  set.rows.resize(count);
  for (auto& row : set.rows) {
    row.clip_id = in.get_string(in.get<std::uint32_t>());
    row.vector.resize(set.dim);
    in.get_array(std::span<float>(row.vector));
    row.label = in.get<std::int32_t>();
  }
  if (!in.at_end()) throw Error(ErrorKind::corruption, "trailing bytes after the last row");
  auto found = set.validate();
  if (warnings) warnings->insert(warnings->end(), found.begin(), found.end());
  return set;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  write_file_bytes(path, encode_embeddings(set));
}

EmbeddingSet read_embeddings(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  return decode_embeddings(read_file_bytes(path), warnings);
}

std::vector<std::vector<std::size_t>> to_batches(const EmbeddingSet& set, std::size_t batch_size,
                                                 std::uint64_t seed) {
  if (batch_size == 0) throw Error(ErrorKind::spec, "batch size must be positive");
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < set.rows.size(); ++i) {
    if (set.rows[i].label != kUnlabeled) labeled.push_back(i);
  }
  if (labeled.empty()) throw Error(ErrorKind::data, "embedding set has no labeled rows");
  nn::Rng rng(seed);
  for (std::size_t i = labeled.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(labeled[i - 1], labeled[pick(rng)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < labeled.size(); start += batch_size) {
    const std::size_t end = std::min(labeled.size(), start + batch_size);
    batches.emplace_back(labeled.begin() + static_cast<long>(start), labeled.begin() + static_cast<long>(end));
  }
  return batches;
}

nn::LabeledData<float> to_labeled_data(const EmbeddingSet& set, std::size_t classes) {
  std::vector<float> values;
  std::vector<int> labels;
  for (const auto& row : set.rows) {
    if (row.label == kUnlabeled) continue;
    values.insert(values.end(), row.vector.begin(), row.vector.end());
    labels.push_back(row.label);
  }
  if (labels.empty()) throw Error(ErrorKind::data, "embedding set has no labeled rows");
  return {nn::Tensor<float>({labels.size(), set.dim}, std::move(values)), nn::one_hot<float>(labels, classes)};
}

nn::Tensor<float> to_inputs(const EmbeddingSet& set) {
  std::vector<float> values;
  values.reserve(set.rows.size() * set.dim);
  for (const auto& row : set.rows) values.insert(values.end(), row.vector.begin(), row.vector.end());
  return nn::Tensor<float>({set.rows.size(), set.dim}, std::move(values));
}

}  // namespace sf::embedding
