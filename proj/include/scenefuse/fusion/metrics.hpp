#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scenefuse/fusion/fusion.hpp"

namespace sf::fusion {

struct EvaluationResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy_percent = 0.0;
  std::size_t classes = 10;
  /// classes x classes, rows = truth, columns = prediction.
  std::vector<std::size_t> confusion;

  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return confusion[truth * classes + predicted];
  }
};

/// Throws alignment error on a length mismatch, data error for T = 0 and
/// label error for ids outside [0, classes).
EvaluationResult accuracy(std::span<const int> predicted, std::span<const int> truth,
                          std::size_t classes = 10);

/// Per-patch probabilities of one framework: clips x patches x classes.
struct PatchProbabilities {
  std::string framework;
  std::vector<std::string> clip_ids;
  std::vector<int> truth;
  std::size_t patches = 10;
  std::size_t classes = 10;
  std::vector<double> values;

  std::size_t clip_count() const noexcept { return clip_ids.size(); }
  std::span<const double> clip(std::size_t t) const {
    return {values.data() + t * patches * classes, patches * classes};
  }
  /// Clip-level table from the mean over all patches.
  ProbabilityTable clip_probabilities() const;
  /// Clip-level table from the mean over the first `k` patches.
  ProbabilityTable prefix_probabilities(std::size_t k) const;
};

struct EarlyDetectionCurve {
  /// accuracy[k - 1] uses the first k patches.
  std::vector<double> accuracy;
};

inline constexpr std::size_t kEarlyDetectionSteps = 10;

/// Accuracy using only the first k = 1..10 patches of each clip. Throws data
/// error if any clip has fewer than 10 patches.
EarlyDetectionCurve early_detection_curve(const PatchProbabilities& p);

/// Same, fusing several aligned frameworks at every k.
EarlyDetectionCurve early_detection_curve(std::span<const PatchProbabilities> frameworks,
                                          FusionStrategy strategy);

}  // namespace sf::fusion
