#include "scenefuse/audio/feature_file.hpp"

#include <string>

#include "scenefuse/common/binary_io.hpp"
#include "scenefuse/common/error.hpp"

namespace sf::audio {
namespace {
constexpr std::string_view kMagic{"SFTEN\0", 6};
}

std::vector<std::uint8_t> encode_feature_file(const SpectrogramTensor& tensor) {
  ByteWriter out;
  out.put_bytes(kMagic);
  out.put<std::uint32_t>(kFeatureFileVersion);
  out.put<std::uint8_t>(static_cast<std::uint8_t>(tensor.kind()));
  out.put<std::uint32_t>(SpectrogramTensor::kBins);
  out.put<std::uint32_t>(SpectrogramTensor::kFrames);
  out.put<std::uint32_t>(SpectrogramTensor::kChannels);
  out.put_array(tensor.data());
  return out.take();
}

SpectrogramTensor decode_feature_file(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, ErrorKind::corruption);
  if (in.remaining() < kMagic.size() || in.get_string(kMagic.size()) != kMagic) {
    throw Error(ErrorKind::format, "not an SFTEN feature file");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kFeatureFileVersion) {
    throw Error(ErrorKind::format, "unsupported SFTEN version " + std::to_string(version));
  }
  const auto kind = in.get<std::uint8_t>();
  if (kind > static_cast<std::uint8_t>(FilterbankKind::cqt)) {
    throw Error(ErrorKind::format, "unknown filterbank kind " + std::to_string(kind));
  }
  const std::uint32_t dims[3] = {in.get<std::uint32_t>(), in.get<std::uint32_t>(),
                                 in.get<std::uint32_t>()};
  if (dims[0] != SpectrogramTensor::kBins || dims[1] != SpectrogramTensor::kFrames ||
      dims[2] != SpectrogramTensor::kChannels) {
    throw Error(ErrorKind::shape, "feature file dims " + std::to_string(dims[0]) + "x" +
                                      std::to_string(dims[1]) + "x" + std::to_string(dims[2]) +
                                      " != 128x704x6");
  }
  std::vector<float> data(std::size_t{dims[0]} * dims[1] * dims[2]);
  in.get_array(std::span<float>(data));
  if (!in.at_end()) throw Error(ErrorKind::corruption, "trailing bytes after SFTEN payload");
  return SpectrogramTensor(static_cast<FilterbankKind>(kind), std::move(data));
}

void write_feature_file(const std::filesystem::path& path, const SpectrogramTensor& tensor) {
  write_file_bytes(path, encode_feature_file(tensor));
}

SpectrogramTensor read_feature_file(const std::filesystem::path& path) {
  return decode_feature_file(read_file_bytes(path));
}

}  // namespace sf::audio
