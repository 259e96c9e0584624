#include "scenefuse/fusion/prob_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "scenefuse/common/error.hpp"

namespace sf::fusion {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::format, "line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    malformed(line, "bad number '" + std::string(field) + "'");
  }
  return v;
}

long parse_int(std::string_view field, std::size_t line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    malformed(line, "bad integer '" + std::string(field) + "'");
  }
  return v;
}

// Returns the class count implied by the header's trailing p0..pN columns.
std::size_t check_header(std::string_view header, std::span<const std::string_view> fixed) {
  const auto fields = split_fields(header);
  if (fields.size() <= fixed.size()) malformed(1, "header has no probability columns");
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (fields[i] != fixed[i]) malformed(1, "expected column '" + std::string(fixed[i]) + "'");
  }
  const std::size_t classes = fields.size() - fixed.size();
  for (std::size_t c = 0; c < classes; ++c) {
    if (fields[fixed.size() + c] != "p" + std::to_string(c)) malformed(1, "expected column p" + std::to_string(c));
  }
  return classes;
}

void append_row(std::string& out, std::span<const double> row) {
  for (double v : row) {
    out += ',';
    out += format_double(v);
  }
  out += '\n';
}

std::string probability_header(std::string_view prefix, std::size_t classes) {
  std::string h(prefix);
  for (std::size_t c = 0; c < classes; ++c) h += ",p" + std::to_string(c);
  return h;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string encode_probability_csv(const ProbabilityTable& table) {
  table.validate();
  std::string out = probability_header("clip_id,truth", table.classes) + "\n";
  for (std::size_t t = 0; t < table.clip_count(); ++t) {
    out += table.clip_ids[t] + "," + std::to_string(table.truth[t]);
    append_row(out, table.row(t));
  }
  return out;
}

ProbabilityTable decode_probability_csv(std::string_view text, std::string framework) {
  const auto lines = split_lines(text);
  if (lines.empty()) malformed(1, "empty probability file");
  static constexpr std::string_view fixed[] = {"clip_id", "truth"};
  ProbabilityTable table;
  table.framework = std::move(framework);
  table.classes = check_header(lines[0], fixed);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != 2 + table.classes) malformed(i + 1, "wrong column count");
    table.clip_ids.emplace_back(fields[0]);
    table.truth.push_back(static_cast<int>(parse_int(fields[1], i + 1)));
    for (std::size_t c = 0; c < table.classes; ++c) table.values.push_back(parse_double(fields[2 + c], i + 1));
  }
  return table;
}

void write_probability_csv(const std::filesystem::path& path, const ProbabilityTable& table) {
  write_text_file(path, encode_probability_csv(table));
}

ProbabilityTable read_probability_csv(const std::filesystem::path& path) {
  return decode_probability_csv(read_text_file(path), path.stem().string());
}

std::string encode_fusion_csv(const FusionResult& result, const FrameworkProbabilities& p) {
  std::string out = probability_header("clip_id,truth", result.classes) + ",label\n";
  for (std::size_t t = 0; t < result.labels.size(); ++t) {
    out += p.clip_ids()[t] + "," + std::to_string(p.truth()[t]);
    append_row(out, result.row(t));
    out.back() = ',';
    out += std::to_string(result.labels[t]) + "\n";
  }
  return out;
}

std::string encode_patch_csv(const PatchProbabilities& p) {
  if (p.truth.size() != p.clip_ids.size() || p.values.size() != p.clip_count() * p.patches * p.classes) {
    throw Error(ErrorKind::data, "patch probability table '" + p.framework + "' has inconsistent sizes");
  }
  std::string out = probability_header("clip_id,truth,patch", p.classes) + "\n";
  for (std::size_t t = 0; t < p.clip_count(); ++t) {
    for (std::size_t k = 0; k < p.patches; ++k) {
      out += p.clip_ids[t] + "," + std::to_string(p.truth[t]) + "," + std::to_string(k);
      append_row(out, p.clip(t).subspan(k * p.classes, p.classes));
    }
  }
  return out;
}

PatchProbabilities decode_patch_csv(std::string_view text, std::string framework) {
  const auto lines = split_lines(text);
  if (lines.empty()) malformed(1, "empty patch probability file");
  static constexpr std::string_view fixed[] = {"clip_id", "truth", "patch"};
  PatchProbabilities p;
  p.framework = std::move(framework);
  p.classes = check_header(lines[0], fixed);
  p.patches = 0;

  // Rows of one clip must be contiguous with patch indices 0, 1, 2, ...
  std::vector<std::size_t> counts;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != 3 + p.classes) malformed(i + 1, "wrong column count");
    const long patch = parse_int(fields[2], i + 1);
    const int truth = static_cast<int>(parse_int(fields[1], i + 1));
    if (patch == 0) {
      p.clip_ids.emplace_back(fields[0]);
      p.truth.push_back(truth);
      counts.push_back(0);
    } else if (p.clip_ids.empty() || fields[0] != p.clip_ids.back() ||
               patch != static_cast<long>(counts.back()) || truth != p.truth.back()) {
      malformed(i + 1, "patch rows out of order");
    }
    ++counts.back();
    for (std::size_t c = 0; c < p.classes; ++c) p.values.push_back(parse_double(fields[3 + c], i + 1));
  }
  if (!counts.empty()) {
    p.patches = counts.front();
    for (std::size_t t = 0; t < counts.size(); ++t) {
      if (counts[t] != p.patches) {
        throw Error(ErrorKind::data, "clip '" + p.clip_ids[t] + "' has " + std::to_string(counts[t]) +
                                         " patches, expected " + std::to_string(p.patches));
      }
    }
  }
  return p;
}

void write_patch_csv(const std::filesystem::path& path, const PatchProbabilities& p) {
  write_text_file(path, encode_patch_csv(p));
}

PatchProbabilities read_patch_csv(const std::filesystem::path& path) {
  return decode_patch_csv(read_text_file(path), path.stem().string());
}

std::string encode_confusion_csv(const EvaluationResult& result) {
  std::string out = "truth";
  for (std::size_t c = 0; c < result.classes; ++c) out += ",pred" + std::to_string(c);
  out += '\n';
  for (std::size_t t = 0; t < result.classes; ++t) {
    out += std::to_string(t);
    for (std::size_t c = 0; c < result.classes; ++c) out += "," + std::to_string(result.at(t, c));
    out += '\n';
  }
  return out;
}

std::string encode_early_csv(const EarlyDetectionCurve& curve) {
  std::string out = "k,accuracy\n";
  for (std::size_t k = 0; k < curve.accuracy.size(); ++k) {
    out += std::to_string(k + 1) + "," + format_double(curve.accuracy[k]) + "\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sf::fusion
