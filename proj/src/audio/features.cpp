#include "scenefuse/audio/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scenefuse/audio/stft.hpp"
#include "scenefuse/common/error.hpp"

namespace sf::audio {

FeatureMatrix log_compress(const FeatureMatrix& bands) {
  FeatureMatrix out(bands.rows, bands.cols);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bands.values.size(); ++i) {
    const double v = bands.values[i];
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::domain, "log compression needs finite non-negative input, got " +
                                         std::to_string(v));
    }
    out.values[i] = 10.0 * std::log10(v + kLogOffset);
    peak = std::max(peak, out.values[i]);
  }
  const double floor = peak - kDynamicRangeDb;
  for (auto& v : out.values) v = std::max(v, floor);
  return out;
}

namespace {

FeatureMatrix regression_delta(const FeatureMatrix& in) {
  constexpr long half = static_cast<long>(kDeltaWidth / 2);
  double denom = 0.0;
  for (long n = 1; n <= half; ++n) denom += 2.0 * static_cast<double>(n * n);

  FeatureMatrix out(in.rows, in.cols);
  const long last = static_cast<long>(in.cols) - 1;
  for (std::size_t r = 0; r < in.rows; ++r) {
    const double* row = &in.values[r * in.cols];
    for (long t = 0; t <= last; ++t) {
      double acc = 0.0;
      for (long n = 1; n <= half; ++n) {
        const double ahead = row[std::min(t + n, last)];
        const double behind = row[std::max(t - n, 0L)];
        acc += static_cast<double>(n) * (ahead - behind);
      }
      out(r, static_cast<std::size_t>(t)) = acc / denom;
    }
  }
  return out;
}

// Center-crop or edge-replicate columns so the result has `frames` columns.
FeatureMatrix fit_frames(const FeatureMatrix& in, std::size_t frames) {
  FeatureMatrix out(in.rows, frames);
  long offset;
  if (in.cols >= frames) {
    offset = static_cast<long>((in.cols - frames) / 2);
  } else {
    offset = -static_cast<long>((frames - in.cols) / 2);
  }
  const long last = static_cast<long>(in.cols) - 1;
  for (std::size_t r = 0; r < in.rows; ++r) {
    for (std::size_t t = 0; t < frames; ++t) {
      const long src = std::clamp(static_cast<long>(t) + offset, 0L, last);
      out(r, t) = in(r, static_cast<std::size_t>(src));
    }
  }
  return out;
}

}  // namespace

FeatureMatrix delta(const FeatureMatrix& features, int order) {
  if (order != 1 && order != 2) {
    throw Error(ErrorKind::spec, "delta order must be 1 or 2, got " + std::to_string(order));
  }
  if (features.cols < kDeltaWidth) {
    throw Error(ErrorKind::too_few_frames, "delta needs at least " + std::to_string(kDeltaWidth) +
                                               " frames, got " + std::to_string(features.cols));
  }
  FeatureMatrix d = regression_delta(features);
  return order == 1 ? d : regression_delta(d);
}

SpectrogramTensor::SpectrogramTensor(FilterbankKind kind, std::vector<float> data)
    : kind_(kind), data_(std::move(data)) {
  if (data_.size() != kBins * kFrames * kChannels) {
    throw Error(ErrorKind::shape, "spectrogram tensor needs 128x704x6 values, got " +
                                      std::to_string(data_.size()));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); })) {
    throw Error(ErrorKind::numeric, "spectrogram tensor has non-finite entries");
  }
}

SpectrogramTensor assemble_tensor(const FeatureMatrix& ch0, const FeatureMatrix& ch1,
                                  FilterbankKind kind) {
  if (ch0.rows != ch1.rows || ch0.cols != ch1.cols) {
    throw Error(ErrorKind::shape, "channel shapes differ: " + std::to_string(ch0.rows) + "x" +
                                      std::to_string(ch0.cols) + " vs " + std::to_string(ch1.rows) +
                                      "x" + std::to_string(ch1.cols));
  }
  if (ch0.rows != SpectrogramTensor::kBins) {
    throw Error(ErrorKind::shape, "expected 128 bands, got " + std::to_string(ch0.rows));
  }
  const FeatureMatrix* statics[2] = {&ch0, &ch1};
  std::vector<float> data(SpectrogramTensor::kBins * kTensorFrames * kTensorChannels);
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const FeatureMatrix stacked[3] = {fit_frames(*statics[ch], kTensorFrames),
                                      fit_frames(delta(*statics[ch], 1), kTensorFrames),
                                      fit_frames(delta(*statics[ch], 2), kTensorFrames)};
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t c = ch * 3 + k;
      for (std::size_t b = 0; b < SpectrogramTensor::kBins; ++b) {
        for (std::size_t t = 0; t < kTensorFrames; ++t) {
          data[(b * kTensorFrames + t) * kTensorChannels + c] = static_cast<float>(stacked[k](b, t));
        }
      }
    }
  }
  return SpectrogramTensor(kind, std::move(data));
}

SpectrogramTensor extract_spectrogram(const AudioClip& clip, const FilterbankSpec& spec) {
  clip.validate();
  if (clip.sample_rate != spec.sample_rate) {
    throw Error(ErrorKind::spec, "clip sample rate " + std::to_string(clip.sample_rate) +
                                     " Hz differs from configured " +
                                     std::to_string(spec.sample_rate) + " Hz (no resampling)");
  }
  const Filterbank bank(spec);
  FeatureMatrix statics[2];
  for (std::size_t ch = 0; ch < 2; ++ch) {
    statics[ch] = log_compress(bank.apply(stft_power(clip.channels[ch], spec)));
  }
  return assemble_tensor(statics[0], statics[1], spec.kind);
}

std::vector<std::size_t> patch_starts(std::size_t frames, std::size_t width, std::size_t hop) {
  std::vector<std::size_t> starts;
  if (width == 0 || hop == 0) return starts;
  for (std::size_t s = 0; s + width <= frames; s += hop) starts.push_back(s);
  return starts;
}

PatchSet split_patches(const SpectrogramTensor& tensor) {
  const std::size_t frames = tensor.data().size() /
                             (SpectrogramTensor::kBins * SpectrogramTensor::kChannels);
  if (frames != kTensorFrames) {
    throw Error(ErrorKind::shape, "expected 704 frames, got " + std::to_string(frames));
  }
  PatchSet set;
  set.starts = patch_starts(frames, kPatchFrames, kPatchHop);
  const std::size_t row = kPatchFrames * kTensorChannels;
  for (std::size_t start : set.starts) {
    Patch p{SpectrogramTensor::kBins, kPatchFrames, kTensorChannels, {}};
    p.data.resize(p.bins * row);
    for (std::size_t b = 0; b < p.bins; ++b) {
      const float* src = tensor.data().data() + (b * kTensorFrames + start) * kTensorChannels;
      std::copy(src, src + row, p.data.begin() + static_cast<long>(b * row));
    }
    set.patches.push_back(std::move(p));
  }
  return set;
}

Patch pool_patch(const Patch& patch, std::size_t factor) {
  if (factor == 0 || patch.bins % factor != 0 || patch.frames % factor != 0) {
    throw Error(ErrorKind::shape, "cannot pool " + std::to_string(patch.bins) + "x" +
                                      std::to_string(patch.frames) + " by " +
                                      std::to_string(factor));
  }
  if (factor == 1) return patch;
  Patch out{patch.bins / factor, patch.frames / factor, patch.channels, {}};
  out.data.assign(out.bins * out.frames * out.channels, 0.0f);
  const double scale = 1.0 / static_cast<double>(factor * factor);
  std::vector<double> acc(out.channels);
  for (std::size_t b = 0; b < out.bins; ++b) {
    for (std::size_t f = 0; f < out.frames; ++f) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t db = 0; db < factor; ++db) {
        for (std::size_t df = 0; df < factor; ++df) {
          for (std::size_t c = 0; c < out.channels; ++c) {
            acc[c] += patch.at(b * factor + db, f * factor + df, c);
          }
        }
      }
      for (std::size_t c = 0; c < out.channels; ++c) {
        out.data[(b * out.frames + f) * out.channels + c] = static_cast<float>(acc[c] * scale);
      }
    }
  }
  return out;
}

ChannelStats compute_channel_stats(std::span<const Patch> patches) {
  if (patches.empty()) throw Error(ErrorKind::data, "no patches to compute statistics from");
  const std::size_t channels = patches.front().channels;
  std::vector<double> sum(channels, 0.0), sum_sq(channels, 0.0);
  std::size_t count = 0;
  // Two passes for the variance to avoid cancellation on large dB offsets.
  for (const auto& p : patches) {
    if (p.channels != channels) throw Error(ErrorKind::shape, "patch channel counts differ");
    for (std::size_t i = 0; i < p.data.size(); ++i) sum[i % channels] += p.data[i];
    count += p.data.size() / channels;
  }
  ChannelStats stats;
  stats.mean.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) stats.mean[c] = sum[c] / static_cast<double>(count);
  for (const auto& p : patches) {
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double d = p.data[i] - stats.mean[i % channels];
      sum_sq[i % channels] += d * d;
    }
  }
  stats.std.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    stats.std[c] = std::sqrt(sum_sq[c] / static_cast<double>(count));
  }
  return stats;
}

void normalize_in_place(Patch& patch, const ChannelStats& stats) {
  if (stats.mean.size() != patch.channels || stats.std.size() != patch.channels) {
    throw Error(ErrorKind::shape, "statistics cover " + std::to_string(stats.mean.size()) +
                                      " channels, patch has " + std::to_string(patch.channels));
  }
  for (std::size_t c = 0; c < patch.channels; ++c) {
    if (!(stats.std[c] > 0.0)) {
      throw Error(ErrorKind::degenerate_channel,
                  "channel " + std::to_string(c) + " has zero standard deviation");
    }
  }
  for (std::size_t i = 0; i < patch.data.size(); ++i) {
    const std::size_t c = i % patch.channels;
    patch.data[i] = static_cast<float>((patch.data[i] - stats.mean[c]) / stats.std[c]);
  }
}

PatchSet normalize(const PatchSet& patches, const ChannelStats& stats) {
  PatchSet out = patches;
  for (auto& p : out.patches) normalize_in_place(p, stats);
  return out;
}

}  // namespace sf::audio
