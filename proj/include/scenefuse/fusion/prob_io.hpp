#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "scenefuse/fusion/fusion.hpp"
#include "scenefuse/fusion/metrics.hpp"

namespace sf::fusion {

/// Shortest text that parses back to the same double.
std::string format_double(double value);

/// Per-clip CSV: header `clip_id,truth,p0..p{C-1}`. Unknown truth is -1.
std::string encode_probability_csv(const ProbabilityTable& table);
ProbabilityTable decode_probability_csv(std::string_view text, std::string framework);
void write_probability_csv(const std::filesystem::path& path, const ProbabilityTable& table);
/// Framework name defaults to the file stem. Throws format error on a
/// malformed file.
ProbabilityTable read_probability_csv(const std::filesystem::path& path);

/// Fused scores in the per-clip layout, labels appended as a `label` column.
std::string encode_fusion_csv(const FusionResult& result, const FrameworkProbabilities& p);

/// Per-patch CSV: header `clip_id,truth,patch,p0..p{C-1}`, patches in
/// temporal order.
std::string encode_patch_csv(const PatchProbabilities& p);
PatchProbabilities decode_patch_csv(std::string_view text, std::string framework);
void write_patch_csv(const std::filesystem::path& path, const PatchProbabilities& p);
PatchProbabilities read_patch_csv(const std::filesystem::path& path);

/// Header `truth,pred0..pred{C-1}`.
std::string encode_confusion_csv(const EvaluationResult& result);
/// Header `k,accuracy`.
std::string encode_early_csv(const EarlyDetectionCurve& curve);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace sf::fusion
