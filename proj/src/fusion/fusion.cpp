#include "scenefuse/fusion/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scenefuse/common/error.hpp"

namespace sf::fusion {

bool is_distribution(std::span<const double> p, double tolerance) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

Distribution mean_over_patches(std::span<const double> rows, std::size_t classes) {
  if (classes == 0 || rows.empty()) throw Error(ErrorKind::data, "no patch probabilities to average");
  if (rows.size() % classes != 0) {
    throw Error(ErrorKind::data, "patch probability buffer is not a multiple of the class count");
  }
  const std::size_t n = rows.size() / classes;
  Distribution mean(classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < classes; ++c) mean[c] += rows[i * classes + c];
  }
  for (auto& v : mean) v /= static_cast<double>(n);
  return mean;
}

std::size_t argmax_label(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorKind::data, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

void ProbabilityTable::validate() const {
  if (classes == 0) throw Error(ErrorKind::data, "probability table with zero classes");
  if (truth.size() != clip_ids.size() || values.size() != clip_ids.size() * classes) {
    throw Error(ErrorKind::data, "probability table '" + framework + "' has inconsistent sizes");
  }
}

FrameworkProbabilities::FrameworkProbabilities(std::vector<ProbabilityTable> tables, RowCheck check)
    : tables_(std::move(tables)) {
  if (tables_.empty()) throw Error(ErrorKind::data, "fusion needs at least one framework");
  const ProbabilityTable& ref = tables_.front();
  for (const auto& table : tables_) {
    table.validate();
    if (table.classes != ref.classes) {
      throw Error(ErrorKind::alignment, "framework '" + table.framework + "' has " +
                                            std::to_string(table.classes) + " classes, expected " +
                                            std::to_string(ref.classes));
    }
    if (table.clip_ids != ref.clip_ids) {
      std::string offenders;
      std::size_t listed = 0;
      const std::size_t common = std::min(table.clip_count(), ref.clip_count());
      for (std::size_t t = 0; t < common && listed < 10; ++t) {
        if (table.clip_ids[t] != ref.clip_ids[t]) {
          offenders += (listed++ ? ", " : "") + table.clip_ids[t] + " != " + ref.clip_ids[t];
        }
      }
      if (table.clip_count() != ref.clip_count()) {
        offenders += (listed ? "; " : "") + std::to_string(table.clip_count()) + " clips vs " +
                     std::to_string(ref.clip_count());
      }
      throw Error(ErrorKind::alignment,
                  "framework '" + table.framework + "' is misaligned with '" + ref.framework + "': " + offenders);
    }
    if (table.truth != ref.truth) {
      throw Error(ErrorKind::alignment, "framework '" + table.framework + "' disagrees on ground truth");
    }
    for (std::size_t t = 0; t < table.clip_count(); ++t) {
      const auto row = table.row(t);
      const bool ok = check == RowCheck::distribution
                          ? is_distribution(row)
                          : std::all_of(row.begin(), row.end(),
                                        [](double v) { return v >= 0.0 && std::isfinite(v); });
      if (!ok) {
        throw Error(ErrorKind::data, "framework '" + table.framework + "' row for clip '" +
                                         table.clip_ids[t] + "' is not a valid probability vector");
      }
    }
  }
}

std::string_view to_string(FusionStrategy strategy) noexcept {
  switch (strategy) {
    case FusionStrategy::mean: return "mean";
    case FusionStrategy::prod: return "prod";
    case FusionStrategy::max: return "max";
  }
  return "unknown";
}

std::optional<FusionStrategy> parse_fusion_strategy(std::string_view name) noexcept {
  if (name == "mean" || name == "MEAN") return FusionStrategy::mean;
  if (name == "prod" || name == "PROD") return FusionStrategy::prod;
  if (name == "max" || name == "MAX") return FusionStrategy::max;
  return std::nullopt;
}

namespace {

FusionResult empty_result(const FrameworkProbabilities& p, FusionStrategy strategy, bool normalized) {
  FusionResult r;
  r.strategy = strategy;
  r.classes = p.classes();
  r.normalized = normalized;
  r.scores.assign(p.clip_count() * p.classes(), 0.0);
  r.labels.assign(p.clip_count(), 0);
  return r;
}

}  // namespace

FusionResult fuse_mean(const FrameworkProbabilities& p) {
  FusionResult r = empty_result(p, FusionStrategy::mean, true);
  const std::size_t s_count = p.framework_count(), c_count = p.classes();
  for (std::size_t t = 0; t < p.clip_count(); ++t) {
    double* out = r.scores.data() + t * c_count;
    for (std::size_t s = 0; s < s_count; ++s) {
      const auto row = p.row(s, t);
      for (std::size_t c = 0; c < c_count; ++c) out[c] += row[c];
    }
    for (std::size_t c = 0; c < c_count; ++c) out[c] /= static_cast<double>(s_count);
    r.labels[t] = static_cast<int>(argmax_label(r.row(t)));
  }
  return r;
}

FusionResult fuse_prod(const FrameworkProbabilities& p) {
  FusionResult r = empty_result(p, FusionStrategy::prod, false);
  const std::size_t s_count = p.framework_count(), c_count = p.classes();
  std::vector<double> log_score(c_count);
  for (std::size_t t = 0; t < p.clip_count(); ++t) {
    double* out = r.scores.data() + t * c_count;
    std::fill(out, out + c_count, 1.0);
    std::fill(log_score.begin(), log_score.end(), 0.0);
    for (std::size_t s = 0; s < s_count; ++s) {
      const auto row = p.row(s, t);
      for (std::size_t c = 0; c < c_count; ++c) {
        out[c] *= row[c];
        log_score[c] += std::log(std::max(row[c], kProdClamp));
      }
    }
    std::size_t zeroed = 0;
    for (std::size_t c = 0; c < c_count; ++c) {
      out[c] /= static_cast<double>(s_count);
      bool exact_zero = false;
      for (std::size_t s = 0; s < s_count && !exact_zero; ++s) exact_zero = p.row(s, t)[c] == 0.0;
      zeroed += exact_zero ? 1 : 0;
    }
    // Underflow alone is not degenerate: the log-domain label still resolves it.
    if (zeroed == c_count) {
      throw Error(ErrorKind::degenerate_fusion,
                  "PROD fusion score vector is all zero for clip '" + p.clip_ids()[t] + "'");
    }
    r.labels[t] = static_cast<int>(argmax_label(log_score));
  }
  return r;
}

FusionResult fuse_max(const FrameworkProbabilities& p) {
  FusionResult r = empty_result(p, FusionStrategy::max, false);
  const std::size_t s_count = p.framework_count(), c_count = p.classes();
  for (std::size_t t = 0; t < p.clip_count(); ++t) {
    double* out = r.scores.data() + t * c_count;
    const auto first = p.row(0, t);
    std::copy(first.begin(), first.end(), out);
    for (std::size_t s = 1; s < s_count; ++s) {
      const auto row = p.row(s, t);
      for (std::size_t c = 0; c < c_count; ++c) out[c] = std::max(out[c], row[c]);
    }
    r.labels[t] = static_cast<int>(argmax_label(r.row(t)));
  }
  return r;
}

FusionResult fuse(const FrameworkProbabilities& p, FusionStrategy strategy) {
  switch (strategy) {
    case FusionStrategy::mean: return fuse_mean(p);
    case FusionStrategy::prod: return fuse_prod(p);
    case FusionStrategy::max: return fuse_max(p);
  }
  throw Error(ErrorKind::spec, "unknown fusion strategy");
}

Distribution normalized_view(std::span<const double> scores) {
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  Distribution out(scores.begin(), scores.end());
  if (total > 0.0) {
    for (auto& v : out) v /= total;
  }
  return out;
}

}  // namespace sf::fusion
