#include "scenefuse/app/run_config.hpp"

#include <charconv>
#include <cmath>
#include <map>

#include "scenefuse/common/error.hpp"
#include "scenefuse/fusion/prob_io.hpp"

namespace sf::app {

namespace {

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(ErrorKind::format, "config key '" + std::string(key) + "' has bad value '" + std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw Error(ErrorKind::format, "config key '" + std::string(key) + "' expects true or false");
}

}  // namespace

std::size_t parse_scale(std::string_view text) {
  if (text.starts_with("1/")) {
    std::size_t d = 0;
    const auto digits = text.substr(2);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && d > 0) return d;
  } else {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc{} && ptr == text.data() + text.size() && v > 0 && v <= 1) {
      const double d = std::round(1.0 / v);
      if (std::abs(d * v - 1.0) < 1e-9) return static_cast<std::size_t>(d);
    }
  }
  throw Error(ErrorKind::spec, "scale must be 1/N, got '" + std::string(text) + "'");
}

std::string RunConfig::to_text() const {
  std::string inputs_text;
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs_text += (i ? ";" : "") + inputs[i].generic_string();
  const auto& t = training;
  const std::pair<std::string_view, std::string> rows[] = {
      {"command", command},
      {"manifest", manifest.generic_string()},
      {"out", out.generic_string()},
      {"features", features.generic_string()},
      {"embeddings", embeddings.generic_string()},
      {"checkpoint", checkpoint.generic_string()},
      {"inputs", inputs_text},
      {"kind", kind},
      {"arch", arch},
      {"scale", "1/" + std::to_string(scale_divisor)},
      {"pool", std::to_string(pool)},
      {"strategy", strategy},
      {"split", split},
      {"name", name},
      {"threads", std::to_string(threads)},
      {"epochs", std::to_string(t.epochs)},
      {"lr", fusion::format_double(t.learning_rate)},
      {"l2", fusion::format_double(t.l2)},
      {"mixup", t.mixup ? "true" : "false"},
      {"mixup_alpha", fusion::format_double(t.mixup_alpha)},
      {"dropout", t.dropout ? "true" : "false"},
      {"batch", std::to_string(t.batch_size)},
      {"seed", std::to_string(t.seed)},
  };
  std::string out_text;
  for (const auto& [key, value] : rows) out_text += std::string(key) + "=" + value + "\n";
  return out_text;
}

RunConfig RunConfig::from_text(std::string_view text) {
  RunConfig c;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::format, "config line without '=': " + std::string(line));
    const std::string_view key = line.substr(0, eq), value = line.substr(eq + 1);
    const std::string v(value);
    if (key == "command") c.command = v;
    else if (key == "manifest") c.manifest = v;
    else if (key == "out") c.out = v;
    else if (key == "features") c.features = v;
    else if (key == "embeddings") c.embeddings = v;
    else if (key == "checkpoint") c.checkpoint = v;
    else if (key == "inputs") {
      c.inputs.clear();
      std::size_t s = 0;
      while (s < v.size()) {
        std::size_t e = v.find(';', s);
        if (e == std::string::npos) e = v.size();
        c.inputs.emplace_back(v.substr(s, e - s));
        s = e + 1;
      }
    } else if (key == "kind") c.kind = v;
    else if (key == "arch") c.arch = v;
    else if (key == "scale") c.scale_divisor = parse_scale(value);
    else if (key == "pool") c.pool = parse_number<std::size_t>(key, value);
    else if (key == "strategy") c.strategy = v;
    else if (key == "split") c.split = v;
    else if (key == "name") c.name = v;
    else if (key == "threads") c.threads = parse_number<std::size_t>(key, value);
    else if (key == "epochs") c.training.epochs = parse_number<std::size_t>(key, value);
    else if (key == "lr") c.training.learning_rate = parse_number<double>(key, value);
    else if (key == "l2") c.training.l2 = parse_number<double>(key, value);
    else if (key == "mixup") c.training.mixup = parse_bool(key, value);
    else if (key == "mixup_alpha") c.training.mixup_alpha = parse_number<double>(key, value);
    else if (key == "dropout") c.training.dropout = parse_bool(key, value);
    else if (key == "batch") c.training.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "seed") c.training.seed = parse_number<std::uint64_t>(key, value);
    else throw Error(ErrorKind::format, "unknown config key '" + std::string(key) + "'");
  }
  return c;
}

}  // namespace sf::app
