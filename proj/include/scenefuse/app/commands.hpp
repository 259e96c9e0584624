#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scenefuse/app/manifest.hpp"
#include "scenefuse/app/run_config.hpp"
#include "scenefuse/app/synth.hpp"
#include "scenefuse/audio/features.hpp"
#include "scenefuse/fusion/metrics.hpp"
#include "scenefuse/zoo/checkpoint.hpp"

namespace sf::app {

struct FileFailure {
  std::string path;
  std::string message;
};

struct ExtractReport {
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::vector<FileFailure> failures;
};

struct TrainReport {
  nn::TrainResult result;
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  std::size_t samples = 0;
};

struct PredictReport {
  fusion::ProbabilityTable clips;
  fusion::PatchProbabilities patches;
  std::filesystem::path csv;
  std::filesystem::path patch_csv;
};

struct FuseReport {
  fusion::FusionResult fused;
  fusion::EvaluationResult evaluation;
  std::filesystem::path csv;
};

struct EvalReport {
  fusion::EvaluationResult evaluation;
  fusion::EvaluationResult meta;  // 3-class indoor / outdoor / transportation
};

/// Patches of a set of clips, clip-major, already pooled.
struct PatchDataset {
  std::vector<std::string> clip_ids;
  std::vector<int> labels;
  std::vector<audio::Patch> patches;
  std::size_t patches_per_clip = audio::kPatchCount;
};

/// Where `extract` writes and `train` / `predict` read a clip's features.
std::filesystem::path feature_path(const std::filesystem::path& root, audio::FilterbankKind kind,
                                   const std::string& clip_id);
/// Feature root for a config: `features` if set, else `features/` next to
/// the manifest.
std::filesystem::path feature_root(const RunConfig& config);

/// Reads and pools the feature files of `rows`. Data error naming the
/// extract command when a file is missing.
PatchDataset load_patches(const std::vector<ManifestRow>& rows, const std::filesystem::path& root,
                          audio::FilterbankKind kind, std::size_t pool);

/// (N x H x W x C) batch of patches normalized per channel.
nn::Tensor<float> stack_patches(std::span<const audio::Patch> patches, const zoo::NormalizationStats& norm);

/// One SFTEN file per manifest clip under `<out>/<kind>/`; existing outputs
/// newer than their WAV are skipped. Per-file failures are collected.
/// Data error on an empty manifest.
ExtractReport cmd_extract(const RunConfig& config);

/// Trains on the manifest's train split (feature patches for vgg14,
/// embeddings for mlp) and writes `model.sfckpt`, `loss.csv` and the config
/// snapshot to `out`.
TrainReport cmd_train(const RunConfig& config, const nn::EpochCallback& on_epoch = {});

/// Clip-level and patch-level probabilities for the configured split,
/// written as `<name>.csv` and `<name>_patches.csv`. Shape error when the
/// checkpoint does not fit the features.
PredictReport cmd_predict(const RunConfig& config);

/// Fuses the probability CSVs in `inputs` and scores the result.
FuseReport cmd_fuse(const RunConfig& config);

/// Accuracy, confusion and meta-class accuracy of one probability CSV.
EvalReport cmd_eval(const RunConfig& config);

/// Early-detection curve from one or more per-patch CSVs (fused with
/// `strategy` when several), written as `early.csv`.
fusion::EarlyDetectionCurve cmd_early(const RunConfig& config);

/// Writes `config_<command>.txt` under `dir`.
void write_config_snapshot(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace sf::app
