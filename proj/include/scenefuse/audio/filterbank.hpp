#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scenefuse/audio/feature_matrix.hpp"

namespace sf::audio {

enum class FilterbankKind : std::uint8_t { mel = 0, gam = 1, cqt = 2 };

std::string_view to_string(FilterbankKind kind) noexcept;
std::optional<FilterbankKind> parse_filterbank_kind(std::string_view name) noexcept;

inline constexpr std::size_t kFilterCount = 128;

struct FilterbankSpec {
  FilterbankKind kind = FilterbankKind::mel;
  std::size_t n_filters = kFilterCount;
  double window_seconds = 0.080;
  double hop_seconds = 0.014;
  double fmin = 0.0;
  double fmax = 24000.0;
  int sample_rate = 48000;

  /// MEL: [0, Nyquist]; GAM: ERB spacing over [50 Hz, Nyquist];
  /// CQT: 32.7 Hz, 16 bins per octave over 8 octaves.
  static FilterbankSpec defaults(FilterbankKind kind, int sample_rate = 48000);

  std::size_t window_samples() const;
  std::size_t hop_samples() const;
  std::size_t fft_bins() const { return window_samples() / 2 + 1; }

  /// Throws spec error when any field is out of range.
  void validate() const;
};

// Frequency scales.
double hz_to_mel(double hz);
double mel_to_hz(double mel);
double hz_to_erb_rate(double hz);
double erb_rate_to_hz(double erb_rate);
double equivalent_rectangular_bandwidth(double hz);

/// Sparse non-negative weights mapping STFT power bins to one band.
struct Band {
  double center_hz = 0.0;
  std::size_t first_bin = 0;
  std::vector<double> weights;
};

class Filterbank {
 public:
  /// Throws spec error if `spec` is invalid.
  explicit Filterbank(const FilterbankSpec& spec);

  const FilterbankSpec& spec() const noexcept { return spec_; }
  std::span<const Band> bands() const noexcept { return bands_; }
  std::vector<double> centers() const;

  /// Dense weight of `bin` in `band`.
  double weight(std::size_t band, std::size_t bin) const;

  /// (fft_bins x frames) power -> (n_filters x frames) band energies.
  FeatureMatrix apply(const FeatureMatrix& power) const;

 private:
  FilterbankSpec spec_;
  std::vector<Band> bands_;
};

FeatureMatrix apply_filterbank(const FeatureMatrix& power, const FilterbankSpec& spec);

}  // namespace sf::audio
