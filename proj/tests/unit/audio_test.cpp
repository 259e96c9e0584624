#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>

#include "scenefuse/audio/feature_file.hpp"
#include "scenefuse/audio/features.hpp"
#include "scenefuse/audio/filterbank.hpp"
#include "scenefuse/audio/stft.hpp"
#include "scenefuse/audio/wav.hpp"
#include "scenefuse/common/binary_io.hpp"
#include "scenefuse/common/error.hpp"

using namespace sf;
using namespace sf::audio;

namespace {

template <typename F>
ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an sf::Error";
  return ErrorKind::io;
}

AudioClip tone_clip(double hz, double seconds, int rate = 48000, double amp = 0.5) {
  AudioClip clip;
  clip.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  for (auto& ch : clip.channels) ch.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * i / rate));
    clip.channels[0][i] = s;
    clip.channels[1][i] = 0.5f * s;
  }
  return clip;
}

std::vector<std::uint8_t> raw_wav(std::uint16_t format, std::uint16_t channels,
                                  std::uint16_t bits, std::uint32_t rate,
                                  const std::vector<std::uint8_t>& payload) {
  ByteWriter w;
  w.put_bytes("RIFF");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(36 + payload.size()));
  w.put_bytes("WAVE");
  w.put_bytes("fmt ");
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(format);
  w.put<std::uint16_t>(channels);
  w.put<std::uint32_t>(rate);
  w.put<std::uint32_t>(rate * channels * bits / 8);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(channels * bits / 8));
  w.put<std::uint16_t>(bits);
  w.put_bytes("data");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(payload.size()));
  auto bytes = w.take();
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

}  // namespace

// ---------------------------------------------------------------- load_wav

TEST(Wav, TenSecondStereoPcm16HasDurationTimesRateSamples) {
  AudioClip clip = tone_clip(440.0, 10.0);
  const auto bytes = encode_wav(clip);
  const AudioClip back = parse_wav(bytes);
  EXPECT_EQ(back.sample_rate, 48000);
  EXPECT_EQ(back.frames(), 480000u);
  EXPECT_NEAR(back.duration(), 10.0, 1e-12);
  for (std::size_t i = 0; i < 1000; ++i) {
    EXPECT_NEAR(back.channels[0][i], clip.channels[0][i], 1.0 / 32767.0);
  }
}

TEST(Wav, MonoIsDuplicatedIntoBothChannels) {
  std::vector<std::uint8_t> payload;
  ByteWriter w;
  for (int i = 0; i < 100; ++i) w.put<std::int16_t>(static_cast<std::int16_t>(i * 100 - 5000));
  const auto bytes = raw_wav(1, 1, 16, 16000, w.bytes());
  const AudioClip clip = parse_wav(bytes);
  ASSERT_EQ(clip.frames(), 100u);
  EXPECT_EQ(clip.channels[0], clip.channels[1]);
  EXPECT_FLOAT_EQ(clip.channels[0][0], -5000.0f / 32768.0f);
}

TEST(Wav, SilenceLoadsAsZeros) {
  const auto bytes = raw_wav(1, 2, 16, 48000, std::vector<std::uint8_t>(4 * 480, 0));
  const AudioClip clip = parse_wav(bytes);
  for (const auto& ch : clip.channels) {
    for (float s : ch) EXPECT_EQ(s, 0.0f);
  }
}

TEST(Wav, Float32RoundTripsExactly) {
  AudioClip clip = tone_clip(1000.0, 0.1);
  const AudioClip back = parse_wav(encode_wav(clip, WavEncoding::float32));
  EXPECT_EQ(back.channels[0], clip.channels[0]);
  EXPECT_EQ(back.channels[1], clip.channels[1]);
}

TEST(Wav, MalformedHeaderIsFormatError) {
  std::vector<std::uint8_t> junk = {'R', 'I', 'F', 'X', 0, 0, 0, 0, 'W', 'A', 'V', 'E'};
  EXPECT_EQ(error_kind_of([&] { parse_wav(junk); }), ErrorKind::format);
  auto truncated = raw_wav(1, 2, 16, 48000, {});
  truncated.resize(30);
  EXPECT_EQ(error_kind_of([&] { parse_wav(truncated); }), ErrorKind::format);
}

TEST(Wav, UnsupportedEncodingsAreRejected) {
  EXPECT_EQ(error_kind_of([] { parse_wav(raw_wav(1, 2, 24, 48000, std::vector<std::uint8_t>(12))); }),
            ErrorKind::unsupported_codec);
  EXPECT_EQ(error_kind_of([] { parse_wav(raw_wav(6, 2, 8, 48000, std::vector<std::uint8_t>(4))); }),
            ErrorKind::unsupported_codec);
  EXPECT_EQ(error_kind_of([] { parse_wav(raw_wav(1, 4, 16, 48000, std::vector<std::uint8_t>(16))); }),
            ErrorKind::unsupported_codec);
}

// -------------------------------------------------------------- stft_power

TEST(Stft, FrameCountForTenSecondsAt48k) {
  const auto spec = FilterbankSpec::defaults(FilterbankKind::mel);
  EXPECT_EQ(spec.window_samples(), 3840u);
  EXPECT_EQ(spec.hop_samples(), 672u);
  // Hand evaluation: floor((480000 - 3840) / 672) + 1 = 708 + 1.
  EXPECT_EQ(frame_count(480000, 3840, 672), 709u);
  std::vector<float> zeros(480000, 0.0f);
  const FeatureMatrix p = stft_power(zeros, spec);
  EXPECT_EQ(p.cols, 709u);
  EXPECT_EQ(p.rows, 1921u);
}

TEST(Stft, ZeroInputGivesZeroPower) {
  const auto spec = FilterbankSpec::defaults(FilterbankKind::mel);
  std::vector<float> zeros(10000, 0.0f);
  const FeatureMatrix p = stft_power(zeros, spec);
  for (double v : p.values) EXPECT_EQ(v, 0.0);
}

TEST(Stft, ShorterThanOneWindowIsTooShort) {
  const auto spec = FilterbankSpec::defaults(FilterbankKind::mel);
  std::vector<float> x(3839, 0.1f);
  EXPECT_EQ(error_kind_of([&] { stft_power(x, spec); }), ErrorKind::too_short);
}

TEST(Stft, BinCenteredSineMatchesBruteForceDftAndConcentratesEnergy) {
  const auto spec = FilterbankSpec::defaults(FilterbankKind::mel);
  const std::size_t n = spec.window_samples();
  const std::size_t k0 = 80;  // 80 * 48000 / 3840 = 1000 Hz
  const double hz = static_cast<double>(k0) * 48000.0 / static_cast<double>(n);
  std::vector<float> x(n + 3 * spec.hop_samples());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<float>(0.8 * std::sin(2.0 * std::numbers::pi * hz * i / 48000.0 + 0.3));
  }
  const FeatureMatrix p = stft_power(x, spec);

  // Brute-force DFT of frame 0 with an independently built periodic Hann.
  std::vector<double> oracle(n / 2 + 1);
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = std::pow(std::sin(std::numbers::pi * i / static_cast<double>(n)), 2.0);
      acc += w * static_cast<double>(x[i]) *
             std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / n);
    }
    oracle[k] = std::norm(acc);
  }
  double total = 0.0, lobe = 0.0, peak = 0.0;
  for (std::size_t k = 0; k < oracle.size(); ++k) {
    EXPECT_NEAR(p(k, 0), oracle[k], 1e-6 * (1.0 + oracle[k])) << "bin " << k;
    total += p(k, 0);
    if (k + 1 >= k0 && k <= k0 + 1) lobe += p(k, 0);
    peak = std::max(peak, p(k, 0));
  }
  EXPECT_EQ(p(k0, 0), peak);
  // The Hann main lobe around the tone bin (k0 - 1 .. k0 + 1) holds > 90 %.
  EXPECT_GT(lobe / total, 0.9);
}

// -------------------------------------------------------- apply_filterbank

TEST(Filterbank, AllKindsProduce128Rows) {
  for (auto kind : {FilterbankKind::mel, FilterbankKind::gam, FilterbankKind::cqt}) {
    const auto spec = FilterbankSpec::defaults(kind);
    FeatureMatrix power(spec.fft_bins(), 7, 1.0);
    const FeatureMatrix bands = apply_filterbank(power, spec);
    EXPECT_EQ(bands.rows, 128u) << to_string(kind);
    EXPECT_EQ(bands.cols, 7u);
  }
}

TEST(Filterbank, WhiteNoiseLightsEveryBand) {
  std::mt19937_64 rng(7);
  std::normal_distribution<float> noise(0.0f, 0.3f);
  std::vector<float> x(48000);
  for (auto& s : x) s = noise(rng);
  for (auto kind : {FilterbankKind::mel, FilterbankKind::gam, FilterbankKind::cqt}) {
    const auto spec = FilterbankSpec::defaults(kind);
    const FeatureMatrix bands = apply_filterbank(stft_power(x, spec), spec);
    for (double v : bands.values) EXPECT_GT(v, 0.0) << to_string(kind);
  }
}

TEST(Filterbank, ZeroPowerGivesZeroBands) {
  for (auto kind : {FilterbankKind::mel, FilterbankKind::gam, FilterbankKind::cqt}) {
    const auto spec = FilterbankSpec::defaults(kind);
    const FeatureMatrix bands = apply_filterbank(FeatureMatrix(spec.fft_bins(), 3), spec);
    for (double v : bands.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(Filterbank, OneKilohertzToneLandsInNearestMelBand) {
  const auto spec = FilterbankSpec::defaults(FilterbankKind::mel);
  // Independent computation of the mel centers (HTK scale, 130 edges).
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto inv = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::size_t nearest = 0;
  double best = 1e18;
  for (std::size_t i = 0; i < 128; ++i) {
    const double c = inv(mel(24000.0) * static_cast<double>(i + 1) / 129.0);
    if (std::abs(c - 1000.0) < best) {
      best = std::abs(c - 1000.0);
      nearest = i;
    }
  }
  const Filterbank bank(spec);
  EXPECT_NEAR(bank.centers()[nearest], inv(mel(24000.0) * static_cast<double>(nearest + 1) / 129.0),
              1e-9);

  const AudioClip clip = tone_clip(1000.0, 1.0);
  const FeatureMatrix bands = bank.apply(stft_power(clip.channels[0], spec));
  for (std::size_t t = 0; t < bands.cols; ++t) {
    std::size_t arg = 0;
    for (std::size_t m = 1; m < bands.rows; ++m) {
      if (bands(m, t) > bands(arg, t)) arg = m;
    }
    EXPECT_EQ(arg, nearest) << "frame " << t;
  }
}

TEST(Filterbank, CentersFollowTheirScales) {
  const Filterbank cqt(FilterbankSpec::defaults(FilterbankKind::cqt));
  const auto c = cqt.centers();
  EXPECT_NEAR(c.front(), 32.7, 1e-12);
  EXPECT_NEAR(c[16] / c[0], 2.0, 1e-12);
  EXPECT_NEAR(c[127], 32.7 * std::pow(2.0, 127.0 / 16.0), 1e-9);

  const Filterbank gam(FilterbankSpec::defaults(FilterbankKind::gam));
  const auto g = gam.centers();
  EXPECT_NEAR(g.front(), 50.0, 1e-9);
  EXPECT_NEAR(g.back(), 24000.0, 1e-6);
  const double step = hz_to_erb_rate(g[1]) - hz_to_erb_rate(g[0]);
  for (std::size_t i = 1; i < g.size(); ++i) {
    EXPECT_NEAR(hz_to_erb_rate(g[i]) - hz_to_erb_rate(g[i - 1]), step, 1e-9);
  }
}

TEST(Filterbank, WrongFilterCountIsSpecError) {
  auto spec = FilterbankSpec::defaults(FilterbankKind::mel);
  spec.n_filters = 64;
  EXPECT_EQ(error_kind_of([&] { Filterbank{spec}; }), ErrorKind::spec);
  spec = FilterbankSpec::defaults(FilterbankKind::mel);
  spec.hop_seconds = 0.1;
  EXPECT_EQ(error_kind_of([&] { spec.validate(); }), ErrorKind::spec);
  spec = FilterbankSpec::defaults(FilterbankKind::gam);
  spec.fmax = 30000.0;
  EXPECT_EQ(error_kind_of([&] { spec.validate(); }), ErrorKind::spec);
}

// ------------------------------------------------------------ log_compress

TEST(LogCompress, UnitInputIsZeroDecibels) {
  FeatureMatrix m(1, 1, 1.0);
  EXPECT_NEAR(log_compress(m)(0, 0), 10.0 * std::log10(1.0 + 1e-10), 1e-15);
}

TEST(LogCompress, ZeroIsClampedToEightyBelowPeak) {
  FeatureMatrix m(1, 2);
  m(0, 0) = 0.0;
  m(0, 1) = 1.0;
  const FeatureMatrix out = log_compress(m);
  // 0 maps to -100 dB, then the floor (0 dB - 80 dB) takes over.
  EXPECT_NEAR(out(0, 0), out(0, 1) - 80.0, 1e-12);
  FeatureMatrix only_zero(1, 1, 0.0);
  EXPECT_NEAR(log_compress(only_zero)(0, 0), -100.0, 1e-9);
}

TEST(LogCompress, NegativeInputIsDomainError) {
  FeatureMatrix m(1, 1, -1e-3);
  EXPECT_EQ(error_kind_of([&] { log_compress(m); }), ErrorKind::domain);
}

TEST(LogCompress, IsEntrywiseMonotone) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> dist(1.0);
  FeatureMatrix m(8, 50);
  for (auto& v : m.values) v = std::pow(dist(rng), 6.0);
  const FeatureMatrix out = log_compress(m);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    for (std::size_t j = 0; j < m.values.size(); ++j) {
      if (m.values[i] <= m.values[j]) {
        EXPECT_LE(out.values[i], out.values[j]);
      }
    }
  }
}

// ------------------------------------------------------------------- delta

TEST(Delta, ConstantHasZeroDelta) {
  FeatureMatrix m(3, 20, 4.25);
  for (int order : {1, 2}) {
    for (double v : delta(m, order).values) EXPECT_EQ(v, 0.0);
  }
}

TEST(Delta, RampHasUnitSlopeInInterior) {
  FeatureMatrix m(2, 30);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t t = 0; t < 30; ++t) m(r, t) = static_cast<double>(t) + 3.0 * r;
  }
  // Regression slope sum_n n(c[t+n] - c[t-n]) / (2 sum n^2) of c[t] = t is 1.
  const FeatureMatrix d = delta(m, 1);
  const FeatureMatrix dd = delta(m, 2);
  for (std::size_t t = 4; t + 4 < 30; ++t) {
    EXPECT_NEAR(d(0, t), 1.0, 1e-12);
    EXPECT_NEAR(d(1, t), 1.0, 1e-12);
  }
  for (std::size_t t = 8; t + 8 < 30; ++t) EXPECT_NEAR(dd(0, t), 0.0, 1e-12);
}

TEST(Delta, TooFewFramesIsRejected) {
  FeatureMatrix m(1, 8, 1.0);
  EXPECT_EQ(error_kind_of([&] { delta(m, 1); }), ErrorKind::too_few_frames);
  FeatureMatrix ok(1, 9, 1.0);
  EXPECT_EQ(error_kind_of([&] { delta(ok, 3); }), ErrorKind::spec);
}

TEST(Delta, IsLinear) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> dist(-40.0, 15.0);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureMatrix x(4, 40), y(4, 40), combo(4, 40);
    const double a = dist(rng) / 10.0, b = dist(rng) / 10.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
      x.values[i] = dist(rng);
      y.values[i] = dist(rng);
      combo.values[i] = a * x.values[i] + b * y.values[i];
    }
    for (int order : {1, 2}) {
      const auto dx = delta(x, order), dy = delta(y, order), dc = delta(combo, order);
      for (std::size_t i = 0; i < dc.values.size(); ++i) {
        EXPECT_NEAR(dc.values[i], a * dx.values[i] + b * dy.values[i], 1e-6);
      }
    }
  }
}

// --------------------------------------------------------- assemble_tensor

namespace {
FeatureMatrix column_index_matrix(std::size_t frames) {
  FeatureMatrix m(128, frames);
  for (std::size_t b = 0; b < 128; ++b) {
    for (std::size_t t = 0; t < frames; ++t) m(b, t) = static_cast<double>(t) + 1000.0 * b;
  }
  return m;
}
}  // namespace

TEST(Assemble, CropsSevenHundredNineFramesDroppingTwoLeadingThreeTrailing) {
  const auto ch0 = column_index_matrix(709);
  FeatureMatrix ch1 = ch0;
  for (auto& v : ch1.values) v = -v;
  const SpectrogramTensor t = assemble_tensor(ch0, ch1, FilterbankKind::mel);
  EXPECT_EQ(t.data().size(), 128u * 704u * 6u);
  // Static channel frame 0 is source column 2; frame 703 is column 705.
  EXPECT_FLOAT_EQ(t.at(0, 0, 0), 2.0f);
  EXPECT_FLOAT_EQ(t.at(0, 703, 0), 705.0f);
  EXPECT_FLOAT_EQ(t.at(5, 10, 3), -(5000.0f + 12.0f));
  // Interior delta of the ramp is 1, delta-delta 0; channel 1 is negated.
  EXPECT_NEAR(t.at(7, 300, 1), 1.0f, 1e-5);
  EXPECT_NEAR(t.at(7, 300, 2), 0.0f, 1e-5);
  EXPECT_NEAR(t.at(7, 300, 4), -1.0f, 1e-5);
}

TEST(Assemble, ExactFrameCountIsIdentity) {
  const auto ch = column_index_matrix(704);
  const SpectrogramTensor t = assemble_tensor(ch, ch, FilterbankKind::gam);
  for (std::size_t f = 0; f < 704; f += 37) EXPECT_FLOAT_EQ(t.at(3, f, 0), ch(3, f));
  EXPECT_EQ(t.kind(), FilterbankKind::gam);
}

TEST(Assemble, ShortInputIsEdgePadded) {
  const auto ch = column_index_matrix(700);
  const SpectrogramTensor t = assemble_tensor(ch, ch, FilterbankKind::cqt);
  // 4 missing frames: 2 replicated on the left, 2 on the right.
  EXPECT_FLOAT_EQ(t.at(0, 0, 0), 0.0f);
  EXPECT_FLOAT_EQ(t.at(0, 1, 0), 0.0f);
  EXPECT_FLOAT_EQ(t.at(0, 2, 0), 0.0f);
  EXPECT_FLOAT_EQ(t.at(0, 3, 0), 1.0f);
  EXPECT_FLOAT_EQ(t.at(0, 703, 0), 699.0f);
  EXPECT_FLOAT_EQ(t.at(0, 701, 0), 699.0f);
}

TEST(Assemble, MismatchedChannelsAreShapeError) {
  EXPECT_EQ(error_kind_of([] {
              assemble_tensor(column_index_matrix(709), column_index_matrix(708), FilterbankKind::mel);
            }),
            ErrorKind::shape);
  EXPECT_EQ(error_kind_of([] { SpectrogramTensor(FilterbankKind::mel, std::vector<float>(10)); }),
            ErrorKind::shape);
}

// ----------------------------------------------------------- split_patches

TEST(Patches, StartsEnumerateHalfOverlap) {
  std::vector<std::size_t> expected;
  for (std::size_t s = 0; s + 128 <= 704; s += 64) expected.push_back(s);
  ASSERT_EQ(expected.size(), 10u);
  EXPECT_EQ(expected.back(), 576u);
  EXPECT_EQ(patch_starts(704, 128, 64), expected);
}

TEST(Patches, SplitGivesTenPatchesThatTileTheTensor) {
  const auto ch = column_index_matrix(704);
  const SpectrogramTensor t = assemble_tensor(ch, ch, FilterbankKind::mel);
  const PatchSet set = split_patches(t);
  ASSERT_EQ(set.patches.size(), 10u);
  EXPECT_EQ(set.starts.back() + 128, 704u);
  for (const auto& p : set.patches) {
    EXPECT_EQ(p.bins, 128u);
    EXPECT_EQ(p.frames, 128u);
    EXPECT_EQ(p.channels, 6u);
  }
  // Patch 0 is frames [0, 128).
  for (std::size_t b = 0; b < 128; b += 9) {
    for (std::size_t f = 0; f < 128; ++f) {
      for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(set.patches[0].at(b, f, c), t.at(b, f, c));
    }
  }
  // Adjacent patches share 64 frames.
  for (std::size_t i = 0; i + 1 < 10; ++i) {
    for (std::size_t f = 0; f < 64; ++f) {
      EXPECT_EQ(set.patches[i].at(11, 64 + f, 2), set.patches[i + 1].at(11, f, 2));
    }
  }
  // Even-indexed patches tile frames 0-639; the second half of patch 9
  // supplies 640-703.
  for (std::size_t f = 0; f < 704; ++f) {
    const float got = f < 640 ? set.patches[2 * (f / 128)].at(40, f % 128, 0)
                              : set.patches[9].at(40, f - 576, 0);
    EXPECT_EQ(got, t.at(40, f, 0));
  }
}

TEST(Patches, PoolingAveragesBlocks) {
  Patch p{4, 4, 1, {}};
  for (int i = 0; i < 16; ++i) p.data.push_back(static_cast<float>(i));
  const Patch q = pool_patch(p, 2);
  ASSERT_EQ(q.data.size(), 4u);
  EXPECT_FLOAT_EQ(q.data[0], (0 + 1 + 4 + 5) / 4.0f);
  EXPECT_FLOAT_EQ(q.data[3], (10 + 11 + 14 + 15) / 4.0f);
  EXPECT_EQ(error_kind_of([&] { pool_patch(p, 3); }), ErrorKind::shape);
}

// --------------------------------------------------------------- normalize

TEST(Normalize, UnitStatsAreIdentity) {
  Patch p{2, 2, 6, std::vector<float>(24)};
  for (std::size_t i = 0; i < 24; ++i) p.data[i] = static_cast<float>(i) * 0.5f - 3.0f;
  PatchSet set{{p}, {0}};
  ChannelStats stats{std::vector<double>(6, 0.0), std::vector<double>(6, 1.0)};
  EXPECT_EQ(normalize(set, stats).patches[0].data, p.data);
}

TEST(Normalize, OwnStatsGiveZeroMeanUnitStd) {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> dist(-30.0f, 12.0f);
  PatchSet set;
  for (int k = 0; k < 4; ++k) {
    Patch p{16, 16, 6, std::vector<float>(16 * 16 * 6)};
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      p.data[i] = dist(rng) + static_cast<float>(i % 6) * 10.0f;
    }
    set.patches.push_back(p);
    set.starts.push_back(0);
  }
  const ChannelStats stats = compute_channel_stats(set.patches);
  const PatchSet out = normalize(set, stats);
  const ChannelStats after = compute_channel_stats(out.patches);
  for (std::size_t c = 0; c < 6; ++c) {
    EXPECT_NEAR(after.mean[c], 0.0, 1e-4);
    EXPECT_NEAR(after.std[c], 1.0, 1e-4);
  }
}

TEST(Normalize, ConstantChannelIsDegenerate) {
  Patch p{4, 4, 6, std::vector<float>(96, 2.0f)};
  PatchSet set{{p}, {0}};
  const ChannelStats stats = compute_channel_stats(set.patches);
  EXPECT_EQ(error_kind_of([&] { normalize(set, stats); }), ErrorKind::degenerate_channel);
}

// ---------------------------------------------------------- full pipeline

TEST(Pipeline, EveryKindYields128x704x6AndTenPatches) {
  AudioClip clip = tone_clip(523.0, 10.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<float> noise(0.0f, 0.01f);
  for (auto& ch : clip.channels) {
    for (auto& s : ch) s += noise(rng);
  }
  for (auto kind : {FilterbankKind::mel, FilterbankKind::gam, FilterbankKind::cqt}) {
    const SpectrogramTensor t = extract_spectrogram(clip, FilterbankSpec::defaults(kind));
    EXPECT_EQ(t.data().size(), 128u * 704u * 6u);
    const PatchSet set = split_patches(t);
    EXPECT_EQ(set.patches.size(), 10u);
    EXPECT_EQ(set.starts, patch_starts(704, 128, 64));
  }
}

TEST(Pipeline, SampleRateMismatchIsRejected) {
  AudioClip clip = tone_clip(440.0, 1.0, 44100);
  EXPECT_EQ(error_kind_of([&] { extract_spectrogram(clip, FilterbankSpec::defaults(FilterbankKind::mel)); }),
            ErrorKind::spec);
}

// ------------------------------------------------------------- SFTEN file

TEST(FeatureFile, RoundTripAndHeaderLayout) {
  const auto ch = column_index_matrix(704);
  const SpectrogramTensor t = assemble_tensor(ch, ch, FilterbankKind::cqt);
  const auto bytes = encode_feature_file(t);
  ASSERT_EQ(bytes.size(), 6u + 4u + 1u + 12u + 4u * 128u * 704u * 6u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 6), std::string("SFTEN\0", 6));
  EXPECT_EQ(bytes[10], 2u);
  const SpectrogramTensor back = decode_feature_file(bytes);
  EXPECT_EQ(back.kind(), FilterbankKind::cqt);
  EXPECT_TRUE(std::equal(back.data().begin(), back.data().end(), t.data().begin()));
}

TEST(FeatureFile, DamagedFilesAreRejected) {
  const auto ch = column_index_matrix(704);
  auto bytes = encode_feature_file(assemble_tensor(ch, ch, FilterbankKind::mel));
  auto truncated = bytes;
  truncated.resize(truncated.size() - 5);
  EXPECT_EQ(error_kind_of([&] { decode_feature_file(truncated); }), ErrorKind::corruption);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(error_kind_of([&] { decode_feature_file(bad_magic); }), ErrorKind::format);
  auto bad_version = bytes;
  bad_version[6] = 9;
  EXPECT_EQ(error_kind_of([&] { decode_feature_file(bad_version); }), ErrorKind::format);
}
