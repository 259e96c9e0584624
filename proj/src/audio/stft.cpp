#include "scenefuse/audio/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "scenefuse/common/error.hpp"

namespace sf::audio {
namespace {

// FFTW planning and plan destruction are not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    in_ = fftw_alloc_real(n_);
    out_ = fftw_alloc_complex(n_ / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() noexcept { return in_; }
  const fftw_complex* output() const noexcept { return out_; }
  void execute() noexcept { fftw_execute(plan_); }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(length));
  }
  return w;
}

std::size_t frame_count(std::size_t samples, std::size_t window, std::size_t hop) noexcept {
  if (window == 0 || hop == 0 || samples < window) return 0;
  return (samples - window) / hop + 1;
}

FeatureMatrix stft_power(std::span<const float> samples, const FilterbankSpec& spec) {
  spec.validate();
  const std::size_t win = spec.window_samples();
  const std::size_t hop = spec.hop_samples();
  const std::size_t frames = frame_count(samples.size(), win, hop);
  if (frames == 0) {
    throw Error(ErrorKind::too_short, "signal of " + std::to_string(samples.size()) +
                                          " samples is shorter than one window of " +
                                          std::to_string(win));
  }
  const std::size_t bins = win / 2 + 1;
  const auto window = hann_window(win);

  FeatureMatrix power(bins, frames);
  RealFft fft(win);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t offset = t * hop;
    double* in = fft.input();
    for (std::size_t i = 0; i < win; ++i) in[i] = window[i] * samples[offset + i];
    fft.execute();
    const fftw_complex* out = fft.output();
    for (std::size_t k = 0; k < bins; ++k) {
      power(k, t) = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
  }
  return power;
}

}  // namespace sf::audio
