#include "scenefuse/fusion/metrics.hpp"

#include "scenefuse/common/error.hpp"

namespace sf::fusion {

EvaluationResult accuracy(std::span<const int> predicted, std::span<const int> truth, std::size_t classes) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::alignment, std::to_string(predicted.size()) + " predictions for " +
                                          std::to_string(truth.size()) + " ground-truth labels");
  }
  if (truth.empty()) throw Error(ErrorKind::data, "accuracy over zero clips");
  EvaluationResult r;
  r.classes = classes;
  r.total = truth.size();
  r.confusion.assign(classes * classes, 0);
  const int limit = static_cast<int>(classes);
  for (std::size_t t = 0; t < truth.size(); ++t) {
    for (int id : {truth[t], predicted[t]}) {
      if (id < 0 || id >= limit) {
        throw Error(ErrorKind::label, "class id " + std::to_string(id) + " outside [0, " +
                                          std::to_string(classes) + ")");
      }
    }
    ++r.confusion[static_cast<std::size_t>(truth[t]) * classes + static_cast<std::size_t>(predicted[t])];
    if (truth[t] == predicted[t]) ++r.correct;
  }
  r.accuracy_percent = 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

ProbabilityTable PatchProbabilities::clip_probabilities() const { return prefix_probabilities(patches); }

ProbabilityTable PatchProbabilities::prefix_probabilities(std::size_t k) const {
  if (k == 0 || k > patches) {
    throw Error(ErrorKind::data, "prefix of " + std::to_string(k) + " patches out of " + std::to_string(patches));
  }
  if (truth.size() != clip_ids.size() || values.size() != clip_ids.size() * patches * classes) {
    throw Error(ErrorKind::data, "patch probability table '" + framework + "' has inconsistent sizes");
  }
  ProbabilityTable out;
  out.framework = framework;
  out.clip_ids = clip_ids;
  out.truth = truth;
  out.classes = classes;
  out.values.reserve(clip_count() * classes);
  for (std::size_t t = 0; t < clip_count(); ++t) {
    const auto mean = mean_over_patches(clip(t).first(k * classes), classes);
    out.values.insert(out.values.end(), mean.begin(), mean.end());
  }
  return out;
}

namespace {

void require_full_patches(const PatchProbabilities& p) {
  if (p.patches < kEarlyDetectionSteps) {
    throw Error(ErrorKind::data, "framework '" + p.framework + "' has " + std::to_string(p.patches) +
                                     " patches per clip, early detection needs " +
                                     std::to_string(kEarlyDetectionSteps));
  }
}

}  // namespace

EarlyDetectionCurve early_detection_curve(const PatchProbabilities& p) {
  require_full_patches(p);
  EarlyDetectionCurve curve;
  for (std::size_t k = 1; k <= kEarlyDetectionSteps; ++k) {
    const ProbabilityTable table = p.prefix_probabilities(k);
    std::vector<int> labels(table.clip_count());
    for (std::size_t t = 0; t < table.clip_count(); ++t) labels[t] = static_cast<int>(argmax_label(table.row(t)));
    curve.accuracy.push_back(accuracy(labels, table.truth, table.classes).accuracy_percent);
  }
  return curve;
}

EarlyDetectionCurve early_detection_curve(std::span<const PatchProbabilities> frameworks, FusionStrategy strategy) {
  if (frameworks.empty()) throw Error(ErrorKind::data, "early detection needs at least one framework");
  for (const auto& p : frameworks) require_full_patches(p);
  EarlyDetectionCurve curve;
  for (std::size_t k = 1; k <= kEarlyDetectionSteps; ++k) {
    std::vector<ProbabilityTable> tables;
    for (const auto& p : frameworks) tables.push_back(p.prefix_probabilities(k));
    const FrameworkProbabilities fp(std::move(tables));
    const FusionResult fused = fuse(fp, strategy);
    curve.accuracy.push_back(accuracy(fused.labels, fp.truth(), fp.classes()).accuracy_percent);
  }
  return curve;
}

}  // namespace sf::fusion
