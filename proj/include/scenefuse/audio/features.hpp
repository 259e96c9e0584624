#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "scenefuse/audio/feature_matrix.hpp"
#include "scenefuse/audio/filterbank.hpp"
#include "scenefuse/audio/wav.hpp"

namespace sf::audio {

inline constexpr std::size_t kTensorFrames = 704;
inline constexpr std::size_t kTensorChannels = 6;
inline constexpr std::size_t kPatchFrames = 128;
inline constexpr std::size_t kPatchHop = 64;
inline constexpr std::size_t kPatchCount = 10;
inline constexpr std::size_t kDeltaWidth = 9;
inline constexpr double kLogOffset = 1e-10;
inline constexpr double kDynamicRangeDb = 80.0;

/// 10 * log10(x + 1e-10), floored at (max - 80 dB). Throws domain error on
/// negative or non-finite input.
FeatureMatrix log_compress(const FeatureMatrix& bands);

/// Regression delta over a 9-frame window with replicated edges; order 2
/// applies the delta twice. Throws too-few-frames error for fewer than 9
/// columns and spec error for an order other than 1 or 2.
FeatureMatrix delta(const FeatureMatrix& features, int order);

/// 128 x 704 x 6 block laid out (bins, frames, channels) row-major. Channel
/// order: ch0 static, ch0 delta, ch0 delta-delta, ch1 static, ch1 delta,
/// ch1 delta-delta.
class SpectrogramTensor {
 public:
  static constexpr std::size_t kBins = kFilterCount;
  static constexpr std::size_t kFrames = kTensorFrames;
  static constexpr std::size_t kChannels = kTensorChannels;

  /// Throws shape error unless `data` holds exactly 128*704*6 finite values.
  SpectrogramTensor(FilterbankKind kind, std::vector<float> data);

  FilterbankKind kind() const noexcept { return kind_; }
  std::span<const float> data() const noexcept { return data_; }

  float at(std::size_t bin, std::size_t frame, std::size_t channel) const {
    return data_[(bin * kFrames + frame) * kChannels + channel];
  }

 private:
  FilterbankKind kind_;
  std::vector<float> data_;
};

/// Computes delta and delta-delta of both static channels on the full frame
/// range, then center-crops (or edge-pads) to 704 frames. Throws shape error
/// when the channels disagree in shape or do not have 128 rows.
SpectrogramTensor assemble_tensor(const FeatureMatrix& ch0, const FeatureMatrix& ch1,
                                  FilterbankKind kind);

/// Full front-end: STFT power, filterbank, log compression, deltas,
/// assembly. Throws spec error if the clip's sample rate differs from the
/// spec's (no resampling).
SpectrogramTensor extract_spectrogram(const AudioClip& clip, const FilterbankSpec& spec);

/// One (bins x frames x channels) slice, row-major.
struct Patch {
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::size_t channels = 0;
  std::vector<float> data;

  float at(std::size_t b, std::size_t f, std::size_t c) const {
    return data[(b * frames + f) * channels + c];
  }
};

struct PatchSet {
  std::vector<Patch> patches;
  std::vector<std::size_t> starts;
};

/// Start offsets of half-overlapping windows covering `frames`.
std::vector<std::size_t> patch_starts(std::size_t frames, std::size_t width, std::size_t hop);

/// Ten 128 x 128 x 6 patches starting at 64 * i.
PatchSet split_patches(const SpectrogramTensor& tensor);

/// Average-pools bins and frames by `factor`. Throws shape error if either
/// extent is not divisible by the factor.
Patch pool_patch(const Patch& patch, std::size_t factor);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Per-channel population mean / std over every value of every patch.
/// Throws data error on an empty range.
ChannelStats compute_channel_stats(std::span<const Patch> patches);

/// (x - mean_c) / std_c per channel. Throws degenerate-channel error if any
/// std is not strictly positive and shape error on a channel-count mismatch.
PatchSet normalize(const PatchSet& patches, const ChannelStats& stats);
void normalize_in_place(Patch& patch, const ChannelStats& stats);

}  // namespace sf::audio
