#include "scenefuse/app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "scenefuse/audio/feature_file.hpp"
#include "scenefuse/common/error.hpp"
#include "scenefuse/embedding/embedding.hpp"
#include "scenefuse/fusion/prob_io.hpp"

namespace sf::app {

namespace fs = std::filesystem;

namespace {

audio::FilterbankKind kind_of(const RunConfig& config) {
  const auto kind = audio::parse_filterbank_kind(config.kind);
  if (!kind) throw Error(ErrorKind::spec, "unknown filterbank kind '" + config.kind + "'");
  return *kind;
}

Split split_of(const RunConfig& config) {
  const auto split = parse_split(config.split);
  if (!split) throw Error(ErrorKind::spec, "unknown split '" + config.split + "'");
  return *split;
}

fusion::FusionStrategy strategy_of(const RunConfig& config) {
  const auto s = fusion::parse_fusion_strategy(config.strategy);
  if (!s) throw Error(ErrorKind::spec, "unknown fusion strategy '" + config.strategy + "'");
  return *s;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

std::size_t expected_feature_bytes() {
  return 6 + 4 + 1 + 12 + sizeof(float) * audio::SpectrogramTensor::kBins * audio::SpectrogramTensor::kFrames *
                              audio::SpectrogramTensor::kChannels;
}

bool up_to_date(const fs::path& output, const fs::path& input) {
  std::error_code ec;
  if (!fs::exists(output, ec) || fs::file_size(output, ec) != expected_feature_bytes() || ec) return false;
  const auto out_time = fs::last_write_time(output, ec);
  if (ec) return false;
  const auto in_time = fs::last_write_time(input, ec);
  return !ec && out_time >= in_time;
}

zoo::NormalizationStats to_float_stats(const audio::ChannelStats& stats) {
  return {{stats.mean.begin(), stats.mean.end()}, {stats.std.begin(), stats.std.end()}};
}

audio::ChannelStats to_channel_stats(const zoo::NormalizationStats& norm) {
  return {{norm.mean.begin(), norm.mean.end()}, {norm.std.begin(), norm.std.end()}};
}

std::vector<int> labels_of(const fusion::ProbabilityTable& table) {
  std::vector<int> labels(table.clip_count());
  for (std::size_t t = 0; t < table.clip_count(); ++t) labels[t] = static_cast<int>(fusion::argmax_label(table.row(t)));
  return labels;
}

void write_metrics(const fs::path& path, const fusion::EvaluationResult& r, const std::string& extra = {}) {
  fusion::write_text_file(path, "correct=" + std::to_string(r.correct) + "\ntotal=" + std::to_string(r.total) +
                                    "\naccuracy=" + fusion::format_double(r.accuracy_percent) + "\n" + extra);
}

}  // namespace

fs::path feature_path(const fs::path& root, audio::FilterbankKind kind, const std::string& clip_id) {
  return root / std::string(audio::to_string(kind)) / (clip_id + ".sften");
}

fs::path feature_root(const RunConfig& config) {
  if (!config.features.empty()) return config.features;
  return config.manifest.parent_path() / "features";
}

void write_config_snapshot(const RunConfig& config, const fs::path& dir) {
  ensure_dir(dir);
  fusion::write_text_file(dir / ("config_" + (config.command.empty() ? std::string("run") : config.command) + ".txt"),
                          config.to_text());
}

ExtractReport cmd_extract(const RunConfig& config) {
  const auto kind = kind_of(config);
  const Manifest manifest = read_manifest(config.manifest);
  if (manifest.rows.empty()) throw Error(ErrorKind::data, "empty manifest");
  ensure_dir(config.out / std::string(audio::to_string(kind)));
  write_config_snapshot(config, config.out);

  ExtractReport report;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.rows.size(); i = next++) {
      const auto& row = manifest.rows[i];
      const fs::path input = manifest.resolve(row);
      const fs::path output = feature_path(config.out, kind, row.clip_id());
      try {
        if (up_to_date(output, input)) {
          std::lock_guard lock(mutex);
          ++report.skipped;
          continue;
        }
        const audio::AudioClip clip = audio::load_wav(input);
        const auto spec = audio::FilterbankSpec::defaults(kind, clip.sample_rate);
        const auto tensor = audio::extract_spectrogram(clip, spec);
        // Write then rename so an interrupted run never leaves a partial file.
        const fs::path partial = output.string() + ".partial";
        audio::write_feature_file(partial, tensor);
        fs::rename(partial, output);
        std::lock_guard lock(mutex);
        ++report.written;
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        report.failures.push_back({input.string(), e.what()});
      }
    }
  };
  const std::size_t threads =
      std::max<std::size_t>(1, std::min<std::size_t>(config.threads ? config.threads : std::thread::hardware_concurrency(),
                                                     manifest.rows.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::sort(report.failures.begin(), report.failures.end(),
            [](const FileFailure& a, const FileFailure& b) { return a.path < b.path; });
  return report;
}

PatchDataset load_patches(const std::vector<ManifestRow>& rows, const fs::path& root, audio::FilterbankKind kind,
                          std::size_t pool) {
  PatchDataset data;
  for (const auto& row : rows) {
    const fs::path path = feature_path(root, kind, row.clip_id());
    if (!fs::exists(path)) {
      throw Error(ErrorKind::data, "missing features " + path.string() + "; run `scenefuse extract --manifest <manifest> --kind " +
                                       std::string(audio::to_string(kind)) + " --out " + root.string() + "` first");
    }
    const auto tensor = audio::read_feature_file(path);
    if (tensor.kind() != kind) {
      throw Error(ErrorKind::data, path.string() + " holds " + std::string(audio::to_string(tensor.kind())) + " features");
    }
    const auto set = audio::split_patches(tensor);
    for (const auto& patch : set.patches) data.patches.push_back(pool == 1 ? patch : audio::pool_patch(patch, pool));
    data.clip_ids.push_back(row.clip_id());
    data.labels.push_back(row.label);
  }
  return data;
}

nn::Tensor<float> stack_patches(std::span<const audio::Patch> patches, const zoo::NormalizationStats& norm) {
  if (patches.empty()) throw Error(ErrorKind::data, "no patches");
  const auto& first = patches.front();
  const audio::ChannelStats stats = to_channel_stats(norm);
  std::vector<float> values;
  values.reserve(patches.size() * first.data.size());
  for (audio::Patch p : patches) {
    if (p.bins != first.bins || p.frames != first.frames || p.channels != first.channels) {
      throw Error(ErrorKind::shape, "patches of different shapes in one batch");
    }
    if (!stats.mean.empty()) audio::normalize_in_place(p, stats);
    values.insert(values.end(), p.data.begin(), p.data.end());
  }
  return nn::Tensor<float>({patches.size(), first.bins, first.frames, first.channels}, std::move(values));
}

namespace {

// Embedding rows restricted to the manifest split (all rows without a manifest).
embedding::EmbeddingSet embeddings_for(const RunConfig& config, std::optional<Split> split) {
  std::vector<std::string> warnings;
  auto set = embedding::read_embeddings(config.embeddings, &warnings);
  if (config.manifest.empty() || !split) return set;
  const Manifest manifest = read_manifest(config.manifest);
  std::set<std::string> wanted;
  std::map<std::string, int> truth;
  for (const auto& row : manifest.split(*split)) {
    wanted.insert(row.clip_id());
    truth[row.clip_id()] = row.label;
  }
  embedding::EmbeddingSet out{set.source, set.dim, {}};
  for (auto& row : set.rows) {
    if (!wanted.count(row.clip_id)) continue;
    row.label = truth[row.clip_id];
    out.rows.push_back(std::move(row));
  }
  if (out.rows.size() != wanted.size()) {
    throw Error(ErrorKind::data, "embedding file " + config.embeddings.string() + " covers " +
                                     std::to_string(out.rows.size()) + " of " + std::to_string(wanted.size()) +
                                     " manifest clips");
  }
  return out;
}

void write_loss_csv(const fs::path& path, const std::vector<double>& losses) {
  std::string text = "epoch,loss\n";
  for (std::size_t e = 0; e < losses.size(); ++e) text += std::to_string(e + 1) + "," + fusion::format_double(losses[e]) + "\n";
  fusion::write_text_file(path, text);
}

}  // namespace

TrainReport cmd_train(const RunConfig& config, const nn::EpochCallback& on_epoch) {
  config.training.validate();
  ensure_dir(config.out);
  write_config_snapshot(config, config.out);

  zoo::ArchitectureSpec arch;
  zoo::NormalizationStats norm;
  nn::LabeledData<float> data;
  if (config.arch == "mlp") {
    const auto set = embeddings_for(config, Split::train);
    arch = zoo::build_mlp(set.dim, zoo::kSceneClasses, config.scale_divisor);
    data = embedding::to_labeled_data(set, zoo::kSceneClasses);
  } else if (config.arch == "vgg14") {
    if (config.manifest.empty()) throw Error(ErrorKind::spec, "vgg14 training needs --manifest");
    const Manifest manifest = read_manifest(config.manifest);
    const auto rows = manifest.split(Split::train);
    if (rows.empty()) throw Error(ErrorKind::data, "manifest has no train clips");
    const std::size_t pool = config.effective_pool();
    if (audio::kPatchFrames % pool != 0) throw Error(ErrorKind::spec, "pool factor must divide 128");
    const std::size_t side = audio::kPatchFrames / pool;
    arch = zoo::build_vgg14({side, side, audio::kTensorChannels}, zoo::kSceneClasses, config.scale_divisor);
    const PatchDataset patches = load_patches(rows, feature_root(config), kind_of(config), pool);
    norm = to_float_stats(audio::compute_channel_stats(patches.patches));
    data.inputs = stack_patches(patches.patches, norm);
    std::vector<int> patch_labels;
    for (int label : patches.labels) patch_labels.insert(patch_labels.end(), patches.patches_per_clip, label);
    data.labels = nn::one_hot<float>(patch_labels, zoo::kSceneClasses);
  } else {
    throw Error(ErrorKind::spec, "unknown architecture '" + config.arch + "' (expected vgg14 or mlp)");
  }

  auto network = zoo::instantiate<float>(arch, config.training.seed);
  TrainReport report;
  report.samples = data.size();
  report.result = nn::train(network, data, config.training, on_epoch);
  report.checkpoint = config.out / "model.sfckpt";
  report.loss_csv = config.out / "loss.csv";
  zoo::save_checkpoint(report.checkpoint, arch, network, norm);
  write_loss_csv(report.loss_csv, report.result.epoch_loss);
  return report;
}

PredictReport cmd_predict(const RunConfig& config) {
  auto model = zoo::load_checkpoint(config.checkpoint);
  ensure_dir(config.out);
  write_config_snapshot(config, config.out);
  const Split split = split_of(config);

  PredictReport report;
  auto& clips = report.clips;
  auto& patches = report.patches;
  nn::Tensor<float> inputs;
  if (model.arch.family == zoo::Family::mlp) {
    const auto set = embeddings_for(config, split);
    if (set.dim != model.arch.input[0]) {
      throw Error(ErrorKind::shape, "checkpoint expects " + std::to_string(model.arch.input[0]) +
                                        "-dim embeddings, file has " + std::to_string(set.dim));
    }
    if (set.rows.empty()) throw Error(ErrorKind::data, "no clips to predict");
    clips.framework = config.name.empty() ? set.source : config.name;
    for (const auto& row : set.rows) {
      clips.clip_ids.push_back(row.clip_id);
      clips.truth.push_back(row.label);
    }
    patches.patches = 1;
    inputs = embedding::to_inputs(set);
  } else {
    const Manifest manifest = read_manifest(config.manifest);
    const auto rows = manifest.split(split);
    if (rows.empty()) throw Error(ErrorKind::data, "manifest has no " + config.split + " clips");
    const std::size_t side = model.arch.input[0];
    if (audio::kPatchFrames % side != 0) throw Error(ErrorKind::shape, "checkpoint input side does not divide 128");
    const auto kind = kind_of(config);
    const PatchDataset data = load_patches(rows, feature_root(config), kind, audio::kPatchFrames / side);
    if (data.patches.front().channels != model.arch.input[2]) {
      throw Error(ErrorKind::shape, "checkpoint expects " + std::to_string(model.arch.input[2]) + " channels");
    }
    clips.framework = config.name.empty() ? std::string(audio::to_string(kind)) : config.name;
    clips.clip_ids = data.clip_ids;
    clips.truth = data.labels;
    patches.patches = data.patches_per_clip;
    inputs = stack_patches(data.patches, model.norm);
  }

  const auto probs = nn::predict_probabilities(model.network, inputs);
  const std::size_t classes = probs.dim(1);
  clips.classes = classes;
  patches.framework = clips.framework;
  patches.clip_ids = clips.clip_ids;
  patches.truth = clips.truth;
  patches.classes = classes;
  patches.values.assign(probs.values().begin(), probs.values().end());
  for (std::size_t t = 0; t < clips.clip_count(); ++t) {
    const auto mean = fusion::mean_over_patches(patches.clip(t), classes);
    clips.values.insert(clips.values.end(), mean.begin(), mean.end());
  }
  report.csv = config.out / (clips.framework + ".csv");
  report.patch_csv = config.out / (clips.framework + "_patches.csv");
  fusion::write_probability_csv(report.csv, clips);
  fusion::write_patch_csv(report.patch_csv, patches);
  return report;
}

FuseReport cmd_fuse(const RunConfig& config) {
  if (config.inputs.empty()) throw Error(ErrorKind::data, "fuse needs at least one probability file");
  const auto strategy = strategy_of(config);
  std::vector<fusion::ProbabilityTable> tables;
  for (const auto& path : config.inputs) tables.push_back(fusion::read_probability_csv(path));
  const fusion::FrameworkProbabilities probs(std::move(tables));
  FuseReport report;
  report.fused = fusion::fuse(probs, strategy);
  report.evaluation = fusion::accuracy(report.fused.labels, probs.truth(), probs.classes());
  ensure_dir(config.out);
  write_config_snapshot(config, config.out);
  const std::string tag(fusion::to_string(strategy));
  report.csv = config.out / ("fused_" + tag + ".csv");
  fusion::write_text_file(report.csv, fusion::encode_fusion_csv(report.fused, probs));
  fusion::write_text_file(config.out / ("confusion_" + tag + ".csv"), fusion::encode_confusion_csv(report.evaluation));
  write_metrics(config.out / ("metrics_" + tag + ".txt"), report.evaluation);
  return report;
}

EvalReport cmd_eval(const RunConfig& config) {
  if (config.inputs.size() != 1) throw Error(ErrorKind::data, "eval takes exactly one probability file");
  const auto table = fusion::read_probability_csv(config.inputs.front());
  const fusion::FrameworkProbabilities checked({table});
  const auto labels = labels_of(table);
  EvalReport report;
  report.evaluation = fusion::accuracy(labels, table.truth, table.classes);
  if (table.classes == kSceneClasses.size()) {
    std::vector<int> meta_pred, meta_truth;
    for (std::size_t t = 0; t < labels.size(); ++t) {
      meta_pred.push_back(static_cast<int>(meta_class(labels[t])));
      meta_truth.push_back(static_cast<int>(meta_class(table.truth[t])));
    }
    report.meta = fusion::accuracy(meta_pred, meta_truth, 3);
  }
  ensure_dir(config.out);
  write_config_snapshot(config, config.out);
  fusion::write_text_file(config.out / "confusion.csv", fusion::encode_confusion_csv(report.evaluation));
  write_metrics(config.out / "metrics.txt", report.evaluation,
                report.meta.total ? "meta_accuracy=" + fusion::format_double(report.meta.accuracy_percent) + "\n"
                                  : std::string());
  return report;
}

fusion::EarlyDetectionCurve cmd_early(const RunConfig& config) {
  if (config.inputs.empty()) throw Error(ErrorKind::data, "early needs at least one per-patch probability file");
  std::vector<fusion::PatchProbabilities> frameworks;
  for (const auto& path : config.inputs) frameworks.push_back(fusion::read_patch_csv(path));
  const auto curve = frameworks.size() == 1 ? fusion::early_detection_curve(frameworks.front())
                                            : fusion::early_detection_curve(frameworks, strategy_of(config));
  ensure_dir(config.out);
  write_config_snapshot(config, config.out);
  fusion::write_text_file(config.out / "early.csv", fusion::encode_early_csv(curve));
  return curve;
}

}  // namespace sf::app
