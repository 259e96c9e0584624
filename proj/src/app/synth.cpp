#include "scenefuse/app/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "scenefuse/common/error.hpp"
#include "scenefuse/fusion/prob_io.hpp"

namespace sf::app {

namespace {

std::mt19937_64 clip_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

audio::AudioClip synth_clip(int label, std::uint64_t seed, double duration_seconds, int sample_rate) {
  if (label < 0 || label >= static_cast<int>(kSceneClasses.size())) {
    throw Error(ErrorKind::label, "no synthetic signature for class " + std::to_string(label));
  }
  auto rng = clip_rng(seed, 1, static_cast<std::uint64_t>(label));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Pitches 0.55 octave apart from 150 Hz; AM rates 0.5 Hz apart.
  const double f0 = 150.0 * std::pow(2.0, 0.55 * label) * (1.0 + 0.06 * (u(rng) - 0.5));
  const double am_rate = 0.5 + 0.4 * label;
  const double am_phase = 2 * std::numbers::pi * u(rng);
  const double tone_level = 0.12 + 0.08 * u(rng);
  const double noise_level = 0.01 + 0.03 * u(rng);
  const double right_gain = 0.6 + 0.3 * u(rng);
  const std::size_t delay = static_cast<std::size_t>(u(rng) * 48);

  const auto n = static_cast<std::size_t>(std::llround(duration_seconds * sample_rate));
  audio::AudioClip clip;
  clip.sample_rate = sample_rate;
  std::vector<double> tone(n + delay);
  const double w = 2 * std::numbers::pi * f0 / sample_rate;
  for (std::size_t i = 0; i < tone.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double envelope = 1.0 + 0.5 * std::sin(2 * std::numbers::pi * am_rate * t + am_phase);
    const double x = static_cast<double>(i) * w;
    tone[i] = envelope * (std::sin(x) + 0.5 * std::sin(2 * x) + 0.25 * std::sin(3 * x));
  }
  for (int ch = 0; ch < 2; ++ch) {
    auto& samples = clip.channels[static_cast<std::size_t>(ch)];
    samples.resize(n);
    const double gain = ch == 0 ? 1.0 : right_gain;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = gain * tone_level * tone[ch == 0 ? i + delay : i] + noise_level * gauss(rng);
      samples[i] = static_cast<float>(std::clamp(s, -1.0, 1.0));
    }
  }
  return clip;
}

embedding::EmbeddingSet synth_embeddings(const Manifest& manifest, const SynthConfig& config) {
  auto rng = clip_rng(config.seed, 2, 0);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<std::vector<float>> centroids(kSceneClasses.size(), std::vector<float>(config.embedding_dim));
  for (auto& c : centroids) {
    for (auto& v : c) v = gauss(rng);
  }
  // A known source name would fail provenance checks at any other length.
  const auto known = embedding::known_source_dim(config.embedding_source);
  const std::string source = known && *known != config.embedding_dim ? "synthetic" : config.embedding_source;
  embedding::EmbeddingSet set{source, config.embedding_dim, {}};
  const auto noise = static_cast<float>(config.embedding_noise);
  for (const auto& row : manifest.rows) {
    embedding::EmbeddingRow out{row.clip_id(), centroids[static_cast<std::size_t>(row.label)], row.label};
    for (auto& v : out.vector) v += noise * gauss(rng);
    set.rows.push_back(std::move(out));
  }
  return set;
}

SynthReport synthesize(const SynthConfig& config, const std::filesystem::path& out) {
  if (config.classes < 1 || config.classes > kSceneClasses.size()) {
    throw Error(ErrorKind::spec, "synthetic class count must be 1..10");
  }
  if (config.clips_per_class < 1 || config.eval_per_class > config.clips_per_class) {
    throw Error(ErrorKind::spec, "eval clips per class cannot exceed clips per class");
  }
  std::error_code ec;
  std::filesystem::create_directories(out / "audio", ec);
  if (ec) throw Error(ErrorKind::io, "cannot create " + (out / "audio").string() + ": " + ec.message());

  SynthReport report;
  report.manifest.base_dir = out;
  std::uint64_t index = 0;
  for (std::size_t c = 0; c < config.classes; ++c) {
    for (std::size_t k = 0; k < config.clips_per_class; ++k, ++index) {
      const Split split = k < config.clips_per_class - config.eval_per_class ? Split::train : Split::eval;
      char name[64];
      std::snprintf(name, sizeof name, "%s_%04zu.wav", std::string(kSceneClasses[c]).c_str(), k);
      ManifestRow row{std::filesystem::path("audio") / name, static_cast<int>(c), split};
      if (config.audio) {
        // Per-clip seed mixes the run seed with the clip's position.
        const auto clip = synth_clip(static_cast<int>(c), config.seed * 1000003ull + index, config.duration_seconds,
                                     config.sample_rate);
        audio::write_wav(out / row.path, clip, audio::WavEncoding::pcm16);
        ++report.wav_count;
      }
      report.manifest.rows.push_back(std::move(row));
    }
  }
  report.manifest_path = out / "manifest.csv";
  fusion::write_text_file(report.manifest_path, encode_manifest(report.manifest));
  report.embeddings_path = out / "embeddings.sfemb";
  embedding::write_embeddings(report.embeddings_path, synth_embeddings(report.manifest, config));
  return report;
}

}  // namespace sf::app
