#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "scenefuse/app/commands.hpp"
#include "scenefuse/common/error.hpp"

namespace {

using sf::app::RunConfig;

struct Flags {
  RunConfig config;
  std::string scale = "1";
  sf::app::SynthConfig synth;
  bool no_mixup = false;
  bool no_dropout = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--out", f.config.out, "Output directory");
  cmd->add_option("--seed", f.config.training.seed, "Seed for all randomness");
  cmd->add_option("--threads", f.config.threads, "Worker threads (0 = all cores)");
  cmd->add_flag("-q,--quiet", f.quiet, "No progress output");
}

void add_data(CLI::App* cmd, Flags& f) {
  cmd->add_option("--manifest", f.config.manifest, "Manifest CSV (path,label,split)");
  cmd->add_option("--kind", f.config.kind, "Filterbank kind")->check(CLI::IsMember({"mel", "gam", "cqt"}));
  cmd->add_option("--features", f.config.features, "Feature root (default: features/ next to the manifest)");
  cmd->add_option("--embeddings", f.config.embeddings, "Embedding file for the mlp path");
}

void add_training(CLI::App* cmd, Flags& f) {
  auto& t = f.config.training;
  cmd->add_option("--arch", f.config.arch, "Architecture")->check(CLI::IsMember({"vgg14", "mlp"}));
  cmd->add_option("--scale", f.scale, "Width scale, e.g. 1/8");
  cmd->add_option("--pool", f.config.pool, "Patch pooling factor (0 = 1 at full width, else 4)");
  cmd->add_option("--epochs", t.epochs, "Training epochs");
  cmd->add_option("--lr", t.learning_rate, "Adam learning rate");
  cmd->add_option("--l2", t.l2, "L2 weight");
  cmd->add_option("--mixup-alpha", t.mixup_alpha, "Mixup Beta parameter");
  cmd->add_option("--batch", t.batch_size, "Batch size");
  cmd->add_flag("--no-mixup", f.no_mixup, "Disable mixup");
  cmd->add_flag("--no-dropout", f.no_dropout, "Disable dropout");
}

int report_failures(const std::vector<sf::app::FileFailure>& failures) {
  for (const auto& failure : failures) std::cerr << "error: " << failure.path << ": " << failure.message << "\n";
  return failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenefuse: spectrogram CNN / embedding MLP scene classification with late fusion"};
  app.require_subcommand(1);
  Flags f;

  auto* extract = app.add_subcommand("extract", "Compute spectrogram tensors for every manifest clip");
  add_common(extract, f);
  add_data(extract, f);

  auto* train = app.add_subcommand("train", "Train a classifier on the train split");
  add_common(train, f);
  add_data(train, f);
  add_training(train, f);

  auto* predict = app.add_subcommand("predict", "Write clip and patch probabilities for a split");
  add_common(predict, f);
  add_data(predict, f);
  predict->add_option("--checkpoint", f.config.checkpoint, "Model checkpoint")->required();
  predict->add_option("--split", f.config.split, "Split to predict")->check(CLI::IsMember({"train", "eval"}));
  predict->add_option("--name", f.config.name, "Framework name for the output files");

  auto* fuse = app.add_subcommand("fuse", "Late-fuse probability CSVs");
  add_common(fuse, f);
  fuse->add_option("--inputs,inputs", f.config.inputs, "Probability CSVs")->required();
  fuse->add_option("--strategy", f.config.strategy, "Fusion rule")->check(CLI::IsMember({"mean", "prod", "max"}));

  auto* eval = app.add_subcommand("eval", "Accuracy and confusion matrix of one probability CSV");
  add_common(eval, f);
  eval->add_option("--inputs,inputs", f.config.inputs, "Probability CSV")->required();

  auto* early = app.add_subcommand("early", "Accuracy using only the first k patches");
  add_common(early, f);
  early->add_option("--inputs,inputs", f.config.inputs, "Per-patch probability CSVs")->required();
  early->add_option("--strategy", f.config.strategy, "Fusion rule when several inputs")
      ->check(CLI::IsMember({"mean", "prod", "max"}));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic audio and embedding dataset");
  add_common(synth, f);
  synth->add_option("--classes", f.synth.classes, "Number of classes (1-10)");
  synth->add_option("--clips-per-class", f.synth.clips_per_class, "Clips per class, train + eval");
  synth->add_option("--eval-per-class", f.synth.eval_per_class, "Eval clips per class");
  synth->add_option("--embedding-dim", f.synth.embedding_dim, "Embedding length");
  synth->add_option("--embedding-noise", f.synth.embedding_noise, "Within-class embedding std");
  bool no_audio = false;
  synth->add_flag("--no-audio", no_audio, "Only write the manifest and embeddings");

  CLI11_PARSE(app, argc, argv);

  auto& config = f.config;
  config.command = app.get_subcommands().front()->get_name();
  try {
    config.scale_divisor = sf::app::parse_scale(f.scale);
    if (f.no_mixup) config.training.mixup = false;
    if (f.no_dropout) config.training.dropout = false;
    const bool verbose = !f.quiet;

    if (config.command == "extract") {
      const auto report = sf::app::cmd_extract(config);
      if (verbose) {
        std::cout << "wrote " << report.written << ", up to date " << report.skipped << ", failed "
                  << report.failures.size() << "\n";
      }
      return report_failures(report.failures);
    }
    if (config.command == "train") {
      sf::nn::EpochCallback progress;
      if (verbose) {
        progress = [](std::size_t epoch, double loss) { std::printf("epoch %zu loss %.6f\n", epoch + 1, loss); };
      }
      const auto report = sf::app::cmd_train(config, progress);
      if (verbose) std::cout << "checkpoint " << report.checkpoint.string() << "\n";
      return 0;
    }
    if (config.command == "predict") {
      const auto report = sf::app::cmd_predict(config);
      if (verbose) std::cout << report.clips.clip_count() << " clips -> " << report.csv.string() << "\n";
      return 0;
    }
    if (config.command == "fuse") {
      const auto report = sf::app::cmd_fuse(config);
      if (verbose) std::cout << config.strategy << " accuracy " << report.evaluation.accuracy_percent << "%\n";
      return 0;
    }
    if (config.command == "eval") {
      const auto report = sf::app::cmd_eval(config);
      if (verbose) {
        std::cout << "accuracy " << report.evaluation.accuracy_percent << "%";
        if (report.meta.total) std::cout << ", meta-class accuracy " << report.meta.accuracy_percent << "%";
        std::cout << "\n";
      }
      return 0;
    }
    if (config.command == "early") {
      const auto curve = sf::app::cmd_early(config);
      if (verbose) {
        for (std::size_t k = 0; k < curve.accuracy.size(); ++k) {
          std::cout << "k=" << k + 1 << " " << curve.accuracy[k] << "%\n";
        }
      }
      return 0;
    }
    if (config.command == "synth") {
      f.synth.seed = config.training.seed;
      f.synth.audio = !no_audio;
      const auto report = sf::app::synthesize(f.synth, config.out);
      sf::app::write_config_snapshot(config, config.out);
      if (verbose) {
        std::cout << report.manifest.rows.size() << " clips, " << report.wav_count << " wavs -> "
                  << report.manifest_path.string() << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
