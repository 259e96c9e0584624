#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sf::fusion {

using Distribution = std::vector<double>;

inline constexpr double kDistributionTolerance = 1e-6;
/// Probability floor used by the log-domain PROD label.
inline constexpr double kProdClamp = 1e-12;

/// Entries >= 0 and sum within `tolerance` of 1.
bool is_distribution(std::span<const double> p, double tolerance = kDistributionTolerance);

/// Entrywise mean of `rows` (N x classes, row-major). Throws data error for
/// N = 0 or a ragged buffer.
Distribution mean_over_patches(std::span<const double> rows, std::size_t classes);

/// Index of the largest entry, lowest index on ties. Throws data error on
/// an empty vector.
std::size_t argmax_label(std::span<const double> scores);

/// One framework's per-clip probabilities, T x C row-major.
struct ProbabilityTable {
  std::string framework;
  std::vector<std::string> clip_ids;
  std::vector<int> truth;
  std::size_t classes = 10;
  std::vector<double> values;

  std::size_t clip_count() const noexcept { return clip_ids.size(); }
  std::span<const double> row(std::size_t t) const { return {values.data() + t * classes, classes}; }
  /// Throws data error on inconsistent sizes.
  void validate() const;
};

enum class RowCheck { distribution, non_negative };

/// S frameworks x T clips x C classes, aligned on clip order.
class FrameworkProbabilities {
 public:
  /// Throws alignment error if clip ids, ground truth or class counts
  /// differ between tables, and data error when `tables` is empty or a row
  /// fails `check`.
  explicit FrameworkProbabilities(std::vector<ProbabilityTable> tables,
                                  RowCheck check = RowCheck::distribution);

  std::size_t framework_count() const noexcept { return tables_.size(); }
  std::size_t clip_count() const noexcept { return tables_.front().clip_count(); }
  std::size_t classes() const noexcept { return tables_.front().classes; }
  std::span<const double> row(std::size_t s, std::size_t t) const { return tables_[s].row(t); }
  const std::vector<std::string>& clip_ids() const noexcept { return tables_.front().clip_ids; }
  const std::vector<int>& truth() const noexcept { return tables_.front().truth; }
  const ProbabilityTable& table(std::size_t s) const { return tables_.at(s); }

 private:
  std::vector<ProbabilityTable> tables_;
};

enum class FusionStrategy { mean, prod, max };

std::string_view to_string(FusionStrategy strategy) noexcept;
std::optional<FusionStrategy> parse_fusion_strategy(std::string_view name) noexcept;

/// Fused per-clip scores (T x C) and labels. PROD and MAX scores are not
/// normalized.
struct FusionResult {
  FusionStrategy strategy = FusionStrategy::mean;
  std::size_t classes = 10;
  std::vector<double> scores;
  std::vector<int> labels;
  bool normalized = true;

  std::span<const double> row(std::size_t t) const { return {scores.data() + t * classes, classes}; }
};

/// (1/S) sum_s p_sc.
FusionResult fuse_mean(const FrameworkProbabilities& p);
/// Scores (1/S) prod_s p_sc as printed; labels from argmax of
/// sum_s ln max(p_sc, 1e-12). Throws degenerate-fusion error when a clip's
/// score vector is entirely zero.
FusionResult fuse_prod(const FrameworkProbabilities& p);
/// max_s p_sc.
FusionResult fuse_max(const FrameworkProbabilities& p);
FusionResult fuse(const FrameworkProbabilities& p, FusionStrategy strategy);

/// Scores divided by their sum, for reporting unnormalized fusions.
Distribution normalized_view(std::span<const double> scores);

}  // namespace sf::fusion
