#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scenefuse/audio/feature_matrix.hpp"
#include "scenefuse/audio/filterbank.hpp"

namespace sf::audio {

/// Periodic Hann window of the given length.
std::vector<double> hann_window(std::size_t length);

/// floor((samples - window) / hop) + 1; zero if the signal is shorter than
/// one window.
std::size_t frame_count(std::size_t samples, std::size_t window, std::size_t hop) noexcept;

/// Power spectrogram |X|^2 with a Hann window of round(window_seconds * rate)
/// samples, FFT length equal to the window, hop of round(hop_seconds * rate)
/// and no centering. Result is (window/2 + 1) x frames.
/// Throws too-short error if the signal is shorter than one window.
FeatureMatrix stft_power(std::span<const float> samples, const FilterbankSpec& spec);

}  // namespace sf::audio
