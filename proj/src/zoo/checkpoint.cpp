#include "scenefuse/zoo/checkpoint.hpp"

#include <map>

#include "scenefuse/common/binary_io.hpp"

namespace sf::zoo {

namespace {

constexpr std::string_view kMagic{"SFCKPT\0", 7};
constexpr std::string_view kArchPrefix = "arch:";
constexpr std::string_view kInputDims = "meta.input_dims";
constexpr std::string_view kClasses = "meta.classes";
constexpr std::string_view kNormMean = "norm.mean";
constexpr std::string_view kNormStd = "norm.std";

void put_tensor(ByteWriter& out, std::string_view name, const nn::Shape& dims, std::span<const float> data) {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  out.put_bytes(name);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) out.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  out.put_array(data);
}

std::vector<float> as_floats(const nn::Shape& values) { return {values.begin(), values.end()}; }

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ArchitectureSpec& arch, nn::Network<float>& network,
                                            const NormalizationStats& norm) {
  if (norm.mean.size() != norm.std.size()) {
    throw Error(ErrorKind::shape, "normalization mean and std lengths differ");
  }
  const auto state = network.state();
  ByteWriter out;
  out.put_bytes(kMagic);
  out.put<std::uint32_t>(kCheckpointVersion);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(state.size() + 5));
  put_tensor(out, std::string(kArchPrefix) + arch.id(), {0}, {});
  put_tensor(out, kInputDims, {arch.input.size()}, as_floats(arch.input));
  put_tensor(out, kClasses, {1}, std::vector<float>{static_cast<float>(arch.classes)});
  put_tensor(out, kNormMean, {norm.mean.size()}, norm.mean);
  put_tensor(out, kNormStd, {norm.std.size()}, norm.std);
  for (const auto& t : state) put_tensor(out, t.name, t.value->shape(), t.value->values());
  return out.take();
}

std::vector<CheckpointTensor> decode_checkpoint_tensors(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() + 8) throw Error(ErrorKind::format, "file too small to be a checkpoint");
  ByteReader in(bytes, ErrorKind::corruption);
  if (in.get_string(kMagic.size()) != kMagic) throw Error(ErrorKind::format, "not a checkpoint (bad magic)");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::format, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  std::vector<CheckpointTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    t.name = in.get_string(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) throw Error(ErrorKind::corruption, "tensor '" + t.name + "' has rank " + std::to_string(rank));
    std::size_t size = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.dims.push_back(in.get<std::uint32_t>());
      size *= t.dims.back();
    }
    if (size * sizeof(float) > in.remaining()) {
      throw Error(ErrorKind::corruption, "tensor '" + t.name + "' runs past the end of the file");
    }
    t.data.resize(size);
    in.get_array(std::span<float>(t.data));
    tensors.push_back(std::move(t));
  }
  if (!in.at_end()) throw Error(ErrorKind::corruption, "trailing bytes after the last tensor");
  return tensors;
}

void load_state(nn::Network<float>& network, std::span<const CheckpointTensor> tensors) {
  std::map<std::string, const CheckpointTensor*> by_name;
  for (const auto& t : tensors) {
    if (t.name.starts_with(kArchPrefix) || t.name.starts_with("meta.") || t.name.starts_with("norm.")) continue;
    by_name[t.name] = &t;
  }
  const auto state = network.state();
  if (state.size() != by_name.size()) {
    throw Error(ErrorKind::shape, "checkpoint holds " + std::to_string(by_name.size()) + " tensors, network has " +
                                      std::to_string(state.size()));
  }
  for (const auto& slot : state) {
    const auto it = by_name.find(slot.name);
    if (it == by_name.end()) throw Error(ErrorKind::shape, "checkpoint lacks tensor '" + slot.name + "'");
    if (it->second->dims != slot.value->shape()) {
      throw Error(ErrorKind::shape, "tensor '" + slot.name + "' is " + nn::shape_string(it->second->dims) +
                                        " in the checkpoint but " + nn::shape_string(slot.value->shape()) +
                                        " in the network");
    }
  }
  for (const auto& slot : state) {
    const auto& src = by_name.at(slot.name)->data;
    std::copy(src.begin(), src.end(), slot.value->values().begin());
  }
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
  const auto tensors = decode_checkpoint_tensors(bytes);
  std::string arch_id;
  const CheckpointTensor *dims = nullptr, *classes = nullptr, *mean = nullptr, *stdev = nullptr;
  for (const auto& t : tensors) {
    if (t.name.starts_with(kArchPrefix)) arch_id = t.name.substr(kArchPrefix.size());
    if (t.name == kInputDims) dims = &t;
    if (t.name == kClasses) classes = &t;
    if (t.name == kNormMean) mean = &t;
    if (t.name == kNormStd) stdev = &t;
  }
  if (arch_id.empty() || !dims || !classes || !mean || !stdev || classes->data.size() != 1) {
    throw Error(ErrorKind::corruption, "checkpoint lacks its architecture record");
  }
  if (mean->data.size() != stdev->data.size()) {
    throw Error(ErrorKind::corruption, "normalization mean and std lengths differ");
  }
  nn::Shape input;
  for (float d : dims->data) input.push_back(static_cast<std::size_t>(d));

  Model model;
  try {
    model.arch = build_from_id(arch_id, input, static_cast<std::size_t>(classes->data[0]));
    model.network = instantiate<float>(model.arch, 0);
    load_state(model.network, tensors);
  } catch (const Error& e) {
    throw Error(ErrorKind::corruption, std::string("checkpoint does not match its architecture: ") + e.what());
  }
  model.norm.mean = mean->data;
  model.norm.std = stdev->data;
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const ArchitectureSpec& arch, nn::Network<float>& network,
                     const NormalizationStats& norm) {
  write_file_bytes(path, encode_checkpoint(arch, network, norm));
}

Model load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace sf::zoo
