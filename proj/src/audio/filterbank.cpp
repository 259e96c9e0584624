#include "scenefuse/audio/filterbank.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "scenefuse/common/error.hpp"

namespace sf::audio {
namespace {

constexpr double kCqtFmin = 32.7;
constexpr double kCqtBinsPerOctave = 16.0;
constexpr double kGamFmin = 50.0;
constexpr int kGammatoneOrder = 4;
// Gammatone skirts below this power gain are dropped from the sparse rows.
constexpr double kGammatoneFloor = 1e-6;

double bin_frequency(std::size_t bin, const FilterbankSpec& spec) {
  return static_cast<double>(bin) * spec.sample_rate / static_cast<double>(spec.window_samples());
}

Band make_band(double center, const std::vector<double>& dense) {
  Band band;
  band.center_hz = center;
  auto first = std::find_if(dense.begin(), dense.end(), [](double w) { return w > 0.0; });
  if (first == dense.end()) return band;
  auto last = std::find_if(dense.rbegin(), dense.rend(), [](double w) { return w > 0.0; }).base();
  band.first_bin = static_cast<std::size_t>(first - dense.begin());
  band.weights.assign(first, last);
  return band;
}

// Triangular filters evenly spaced on the mel scale, area-normalized.
std::vector<Band> mel_bands(const FilterbankSpec& spec) {
  const std::size_t n = spec.n_filters;
  const double lo = hz_to_mel(spec.fmin);
  const double hi = hz_to_mel(spec.fmax);
  std::vector<double> edges(n + 2);
  for (std::size_t i = 0; i < n + 2; ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n + 1));
  }
  std::vector<Band> bands;
  std::vector<double> dense(spec.fft_bins());
  for (std::size_t m = 0; m < n; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    const double norm = 2.0 / (right - left);
    for (std::size_t k = 0; k < dense.size(); ++k) {
      const double f = bin_frequency(k, spec);
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      dense[k] = w * norm;
    }
    bands.push_back(make_band(center, dense));
  }
  return bands;
}

// Power response |H(f)|^2 of 4th-order gammatone filters at ERB-rate
// spaced centers.
std::vector<Band> gammatone_bands(const FilterbankSpec& spec) {
  const std::size_t n = spec.n_filters;
  const double lo = hz_to_erb_rate(spec.fmin);
  const double hi = hz_to_erb_rate(spec.fmax);
  std::vector<Band> bands;
  std::vector<double> dense(spec.fft_bins());
  for (std::size_t m = 0; m < n; ++m) {
    const double center =
        erb_rate_to_hz(lo + (hi - lo) * static_cast<double>(m) / static_cast<double>(n - 1));
    const double bandwidth = 1.019 * equivalent_rectangular_bandwidth(center);
    for (std::size_t k = 0; k < dense.size(); ++k) {
      const double x = (bin_frequency(k, spec) - center) / bandwidth;
      const double w = std::pow(1.0 + x * x, -static_cast<double>(kGammatoneOrder));
      dense[k] = w >= kGammatoneFloor ? w : 0.0;
    }
    bands.push_back(make_band(center, dense));
  }
  return bands;
}

// Squared magnitude of a length-L Hann window's spectrum, x in units of
// 1/L cycles per sample. Restricted to the main lobe.
double hann_lobe_power(double x) {
  const double ax = std::abs(x);
  if (ax >= 2.0) return 0.0;
  double amp;
  if (std::abs(ax - 1.0) < 1e-9) {
    amp = 0.5;
  } else if (ax < 1e-12) {
    amp = 1.0;
  } else {
    const double px = std::numbers::pi * ax;
    amp = std::sin(px) / (px * (1.0 - ax * ax));
  }
  return amp * amp;
}

// Pseudo-CQT: each geometrically spaced band weights the STFT bins by the
// spectrum of a Hann-windowed constant-Q kernel of length Q * rate / fc,
// capped at the STFT window.
std::vector<Band> cqt_bands(const FilterbankSpec& spec) {
  const std::size_t n = spec.n_filters;
  const double q = 1.0 / (std::pow(2.0, 1.0 / kCqtBinsPerOctave) - 1.0);
  const double window = static_cast<double>(spec.window_samples());
  std::vector<Band> bands;
  std::vector<double> dense(spec.fft_bins());
  for (std::size_t m = 0; m < n; ++m) {
    const double center = spec.fmin * std::pow(2.0, static_cast<double>(m) / kCqtBinsPerOctave);
    const double length = std::min(q * spec.sample_rate / center, window);
    double total = 0.0;
    for (std::size_t k = 0; k < dense.size(); ++k) {
      const double x = (bin_frequency(k, spec) - center) * length / spec.sample_rate;
      dense[k] = hann_lobe_power(x);
      total += dense[k];
    }
    for (auto& w : dense) w /= total;
    bands.push_back(make_band(center, dense));
  }
  return bands;
}

}  // namespace

std::string_view to_string(FilterbankKind kind) noexcept {
  switch (kind) {
    case FilterbankKind::mel: return "mel";
    case FilterbankKind::gam: return "gam";
    case FilterbankKind::cqt: return "cqt";
  }
  return "unknown";
}

std::optional<FilterbankKind> parse_filterbank_kind(std::string_view name) noexcept {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "mel") return FilterbankKind::mel;
  if (lower == "gam") return FilterbankKind::gam;
  if (lower == "cqt") return FilterbankKind::cqt;
  return std::nullopt;
}

FilterbankSpec FilterbankSpec::defaults(FilterbankKind kind, int sample_rate) {
  FilterbankSpec spec;
  spec.kind = kind;
  spec.sample_rate = sample_rate;
  const double nyquist = sample_rate / 2.0;
  switch (kind) {
    case FilterbankKind::mel:
      spec.fmin = 0.0;
      spec.fmax = nyquist;
      break;
    case FilterbankKind::gam:
      spec.fmin = kGamFmin;
      spec.fmax = nyquist;
      break;
    case FilterbankKind::cqt:
      spec.fmin = kCqtFmin;
      spec.fmax = std::min(nyquist, kCqtFmin * std::pow(2.0, kFilterCount / kCqtBinsPerOctave));
      break;
  }
  return spec;
}

std::size_t FilterbankSpec::window_samples() const {
  return static_cast<std::size_t>(std::lround(window_seconds * sample_rate));
}

std::size_t FilterbankSpec::hop_samples() const {
  return static_cast<std::size_t>(std::lround(hop_seconds * sample_rate));
}

void FilterbankSpec::validate() const {
  if (n_filters != kFilterCount) {
    throw Error(ErrorKind::spec, "filter count must be " + std::to_string(kFilterCount) +
                                     ", got " + std::to_string(n_filters));
  }
  if (sample_rate <= 0) throw Error(ErrorKind::spec, "sample rate must be positive");
  if (!(hop_seconds > 0.0 && window_seconds > hop_seconds) || hop_samples() == 0) {
    throw Error(ErrorKind::spec, "require window > hop > 0");
  }
  // MEL starts at 0 Hz, so fmin may equal zero.
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw Error(ErrorKind::spec, "require 0 <= fmin < fmax <= Nyquist");
  }
  if (kind == FilterbankKind::cqt) {
    if (fmin <= 0.0) throw Error(ErrorKind::spec, "CQT needs fmin > 0");
    const double top = fmin * std::pow(2.0, (kFilterCount - 1) / kCqtBinsPerOctave);
    if (top > sample_rate / 2.0) throw Error(ErrorKind::spec, "CQT bands exceed Nyquist");
  }
  if (kind == FilterbankKind::gam && fmin <= 0.0) {
    throw Error(ErrorKind::spec, "GAM needs fmin > 0");
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }
double hz_to_erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }
double erb_rate_to_hz(double erb_rate) {
  return (std::pow(10.0, erb_rate / 21.4) - 1.0) / 0.00437;
}
double equivalent_rectangular_bandwidth(double hz) { return 24.7 * (4.37 * hz / 1000.0 + 1.0); }

Filterbank::Filterbank(const FilterbankSpec& spec) : spec_(spec) {
  spec_.validate();
  switch (spec_.kind) {
    case FilterbankKind::mel: bands_ = mel_bands(spec_); break;
    case FilterbankKind::gam: bands_ = gammatone_bands(spec_); break;
    case FilterbankKind::cqt: bands_ = cqt_bands(spec_); break;
  }
}

std::vector<double> Filterbank::centers() const {
  std::vector<double> c;
  c.reserve(bands_.size());
  for (const auto& b : bands_) c.push_back(b.center_hz);
  return c;
}

double Filterbank::weight(std::size_t band, std::size_t bin) const {
  const Band& b = bands_.at(band);
  if (bin < b.first_bin || bin >= b.first_bin + b.weights.size()) return 0.0;
  return b.weights[bin - b.first_bin];
}

FeatureMatrix Filterbank::apply(const FeatureMatrix& power) const {
  if (power.rows != spec_.fft_bins()) {
    throw Error(ErrorKind::shape, "power spectrogram has " + std::to_string(power.rows) +
                                      " bins, filterbank expects " +
                                      std::to_string(spec_.fft_bins()));
  }
  FeatureMatrix out(bands_.size(), power.cols);
  for (std::size_t m = 0; m < bands_.size(); ++m) {
    const Band& band = bands_[m];
    double* row = &out.values[m * power.cols];
    for (std::size_t j = 0; j < band.weights.size(); ++j) {
      const double w = band.weights[j];
      const double* src = &power.values[(band.first_bin + j) * power.cols];
      for (std::size_t t = 0; t < power.cols; ++t) row[t] += w * src[t];
    }
  }
  return out;
}

FeatureMatrix apply_filterbank(const FeatureMatrix& power, const FilterbankSpec& spec) {
  return Filterbank(spec).apply(power);
}

}  // namespace sf::audio
