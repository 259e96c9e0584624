#include "scenefuse/zoo/architecture.hpp"

#include <charconv>

namespace sf::zoo {

using nn::LayerKind;
using nn::Shape;

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::vgg14: return "vgg14";
    case Family::mlp: return "mlp";
  }
  return "unknown";
}

std::string ArchitectureSpec::id() const {
  std::string s(to_string(family));
  if (scale_divisor != 1) s += "/" + std::to_string(scale_divisor);
  return s;
}

namespace {

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

void check_classes(std::size_t classes) {
  if (classes < 1) throw Error(ErrorKind::spec, "an architecture needs at least one class");
}

std::string shape_text(const Shape& s) { return nn::shape_string(s); }

}  // namespace

ArchitectureSpec build_vgg14(const Shape& input, std::size_t classes, std::size_t scale_divisor) {
  check_classes(classes);
  if (scale_divisor != 1 && scale_divisor != 2 && scale_divisor != 4 && scale_divisor != 8) {
    throw Error(ErrorKind::spec, "vgg14 width scale must be 1, 1/2, 1/4 or 1/8");
  }
  if (input.size() != 3 || input[0] != input[1] || input[0] == 0 || input[0] % 8 != 0) {
    throw Error(ErrorKind::spec, "vgg14 needs a square input with sides divisible by 8, got " + shape_text(input));
  }
  if (scale_divisor == 1 && (input != Shape{128, 128, 6})) {
    throw Error(ErrorKind::spec, "full-width vgg14 takes 128x128x6 patches, got " + shape_text(input));
  }
  if (input[2] != 6 && input[2] != 3) {
    throw Error(ErrorKind::spec, "vgg14 takes 6 spectrogram or 3 image channels, got " + std::to_string(input[2]));
  }

  ArchitectureSpec spec;
  spec.family = Family::vgg14;
  spec.scale_divisor = scale_divisor;
  spec.input = input;
  spec.classes = classes;

  struct Block {
    std::size_t width;
    bool pool;
    bool global;
    double rate;
  };
  static constexpr Block blocks[] = {
      {64, false, false, 0.25},  {64, true, false, 0.25},   {128, false, false, 0.30}, {128, true, false, 0.30},
      {256, false, false, 0.35}, {256, false, false, 0.35}, {256, false, false, 0.35}, {256, true, false, 0.35},
      {512, false, false, 0.35}, {512, false, false, 0.35}, {512, false, false, 0.35}, {512, false, true, 0.35},
  };
  std::size_t channels = input[2];
  for (std::size_t b = 0; b < std::size(blocks); ++b) {
    const Block& block = blocks[b];
    const std::string prefix = "block" + std::to_string(b + 1);
    const std::size_t width = block.width / scale_divisor;
    spec.layers.push_back({LayerKind::batch_norm, prefix + ".bn_in", channels});
    spec.layers.push_back({LayerKind::conv3x3, prefix + ".conv", width});
    spec.layers.push_back({LayerKind::relu, prefix + ".relu"});
    spec.layers.push_back({LayerKind::batch_norm, prefix + ".bn_out", width});
    if (block.pool) spec.layers.push_back({LayerKind::avg_pool, prefix + ".pool"});
    if (block.global) spec.layers.push_back({LayerKind::global_avg_pool, prefix + ".gap"});
    spec.layers.push_back({LayerKind::dropout, prefix + ".dropout", 0, block.rate});
    std::string label = "BN - Conv [3x3] @" + std::to_string(width) + " - ReLU - BN";
    if (block.pool) label += " - AP";
    if (block.global) label += " - GAP";
    label += " - Dr (" + std::to_string(static_cast<int>(block.rate * 100 + 0.5)) + "%)";
    spec.stages.push_back({std::move(label), spec.layers.size() - 1});
    channels = width;
  }
  const std::size_t hidden = 1024 / scale_divisor;
  spec.layers.push_back({LayerKind::dense, "fc1", hidden});
  spec.layers.push_back({LayerKind::relu, "fc1.relu"});
  spec.layers.push_back({LayerKind::dropout, "fc1.dropout", 0, 0.40});
  spec.stages.push_back({"FC - ReLU - Dr (40%)", spec.layers.size() - 1});
  spec.layers.push_back({LayerKind::dense, "fc2", classes});
  spec.layers.push_back({LayerKind::softmax, "softmax"});
  spec.stages.push_back({"FC - Softmax", spec.layers.size() - 1});
  return spec;
}

ArchitectureSpec build_mlp(std::size_t input_dim, std::size_t classes, std::size_t scale_divisor) {
  check_classes(classes);
  if (input_dim < 1) throw Error(ErrorKind::spec, "mlp input dimension must be at least 1");
  if (!is_power_of_two(scale_divisor) || scale_divisor > 1024) {
    throw Error(ErrorKind::spec, "mlp width scale must be 1/2^k with 2^k <= 1024");
  }
  ArchitectureSpec spec;
  spec.family = Family::mlp;
  spec.scale_divisor = scale_divisor;
  spec.input = {input_dim};
  spec.classes = classes;
  const std::size_t widths[] = {8192 / scale_divisor, 8192 / scale_divisor, 1024 / scale_divisor};
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string prefix = "fc" + std::to_string(i + 1);
    spec.layers.push_back({LayerKind::dense, prefix, widths[i]});
    spec.layers.push_back({LayerKind::relu, prefix + ".relu"});
    spec.layers.push_back({LayerKind::dropout, prefix + ".dropout", 0, 0.40});
    spec.stages.push_back({"FC - ReLU - Dr (40%)", spec.layers.size() - 1});
  }
  spec.layers.push_back({LayerKind::dense, "fc4", classes});
  spec.layers.push_back({LayerKind::softmax, "softmax"});
  spec.stages.push_back({"FC - Softmax", spec.layers.size() - 1});
  return spec;
}

ArchitectureSpec build_from_id(std::string_view id, const Shape& input, std::size_t classes) {
  std::string_view family = id;
  std::size_t divisor = 1;
  if (const auto slash = id.find('/'); slash != std::string_view::npos) {
    family = id.substr(0, slash);
    const std::string_view digits = id.substr(slash + 1);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), divisor);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || divisor == 0) {
      throw Error(ErrorKind::spec, "bad width scale in architecture '" + std::string(id) + "'");
    }
  }
  if (family == "vgg14") return build_vgg14(input, classes, divisor);
  if (family == "mlp") {
    if (input.size() != 1) throw Error(ErrorKind::spec, "mlp input must be a vector, got " + shape_text(input));
    return build_mlp(input[0], classes, divisor);
  }
  throw Error(ErrorKind::spec, "unknown architecture '" + std::string(id) + "'");
}

std::vector<Shape> infer_shapes(const ArchitectureSpec& spec) {
  std::vector<Shape> shapes;
  Shape current = spec.input;
  auto fail = [&](const LayerSpec& layer) {
    throw Error(ErrorKind::shape, "layer '" + layer.name + "' cannot take " + shape_text(current));
  };
  for (const auto& layer : spec.layers) {
    switch (layer.kind) {
      case LayerKind::conv3x3:
        if (current.size() != 3) fail(layer);
        current = {current[0], current[1], layer.units};
        break;
      case LayerKind::batch_norm:
        if (current.empty() || current.back() != layer.units) fail(layer);
        break;
      case LayerKind::avg_pool:
        if (current.size() != 3 || current[0] % 2 || current[1] % 2) fail(layer);
        current = {current[0] / 2, current[1] / 2, current[2]};
        break;
      case LayerKind::global_avg_pool:
        if (current.size() != 3) fail(layer);
        current = {current[2]};
        break;
      case LayerKind::dense:
        if (current.size() != 1) fail(layer);
        current = {layer.units};
        break;
      case LayerKind::softmax:
        if (current.size() != 1) fail(layer);
        break;
      case LayerKind::relu:
      case LayerKind::dropout:
        break;
    }
    shapes.push_back(current);
  }
  return shapes;
}

std::vector<Shape> stage_shapes(const ArchitectureSpec& spec) {
  const auto shapes = infer_shapes(spec);
  std::vector<Shape> out;
  for (const auto& stage : spec.stages) out.push_back(shapes.at(stage.last_layer));
  return out;
}

std::size_t trainable_layer_count(const ArchitectureSpec& spec) {
  std::size_t n = 0;
  for (const auto& layer : spec.layers) n += layer.kind == LayerKind::conv3x3 || layer.kind == LayerKind::dense;
  return n;
}

std::size_t parameter_count(const ArchitectureSpec& spec) {
  const auto shapes = infer_shapes(spec);
  std::size_t total = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Shape& in = i == 0 ? spec.input : shapes[i - 1];
    const auto& layer = spec.layers[i];
    switch (layer.kind) {
      case LayerKind::conv3x3: total += 9 * in.back() * layer.units + layer.units; break;
      case LayerKind::dense: total += in.back() * layer.units + layer.units; break;
      case LayerKind::batch_norm: total += 2 * layer.units; break;
      default: break;
    }
  }
  return total;
}

template <typename T>
nn::Network<T> instantiate(const ArchitectureSpec& spec, std::uint64_t seed) {
  const auto shapes = infer_shapes(spec);
  nn::Network<T> net;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Shape& in = i == 0 ? spec.input : shapes[i - 1];
    const auto& layer = spec.layers[i];
    switch (layer.kind) {
      case LayerKind::conv3x3: net.template add<nn::Conv3x3<T>>(layer.name, in.back(), layer.units); break;
      case LayerKind::batch_norm: net.template add<nn::BatchNorm<T>>(layer.name, layer.units); break;
      case LayerKind::relu: net.template add<nn::Relu<T>>(layer.name); break;
      case LayerKind::avg_pool: net.template add<nn::AvgPool2x2<T>>(layer.name); break;
      case LayerKind::global_avg_pool: net.template add<nn::GlobalAvgPool<T>>(layer.name); break;
      case LayerKind::dense: net.template add<nn::Dense<T>>(layer.name, in.back(), layer.units); break;
      case LayerKind::softmax: net.template add<nn::Softmax<T>>(layer.name); break;
      case LayerKind::dropout: net.template add<nn::Dropout<T>>(layer.name, layer.rate); break;
    }
  }
  nn::Rng rng(seed);
  net.initialize(rng);
  return net;
}

template nn::Network<float> instantiate<float>(const ArchitectureSpec&, std::uint64_t);
template nn::Network<double> instantiate<double>(const ArchitectureSpec&, std::uint64_t);

}  // namespace sf::zoo
