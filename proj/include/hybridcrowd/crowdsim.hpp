#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hybridcrowd/dataset.hpp"

namespace hybridcrowd {

struct CellKey {
  Category category = Category::age;
  Status status = Status::genuine;
  Sentiment sentiment = Sentiment::positive;
  Group group = Group::young;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct SyntheticResponderSpec {
  std::string id;
  ResponderKind kind = ResponderKind::synthetic;
  double base_accuracy = 0.7;
  /// Overrides base_accuracy for individual cells.
  std::map<CellKey, double> per_cell_accuracy;
  /// Planted counterfactual bias per category, in likelihood units: the
  /// privileged group's mean likelihood exceeds its complement's by this much
  /// for positive headlines and falls below it for negative ones.
  std::map<Category, double> bias_shift;
  /// Planted framing effect per (category, sentiment), in likelihood units:
  /// raises every mean likelihood in the cell by half this amount.
  std::map<std::pair<Category, Sentiment>, double> framing_shift;
  double correlation_rho = 0.0;
  double hesitation_rate = 0.1;
};

struct CrowdSpec {
  std::vector<SyntheticResponderSpec> members;
  std::uint64_t shared_noise_seed = 0;
};

/// A member accurate at `high` on one category and `low` elsewhere.
SyntheticResponderSpec specialist(std::string id, Category expertise, double high, double low);

/// Correct-leaning probability whose accuracy metric (0.5 credit for
/// hesitations) equals `metric_accuracy`.
double base_accuracy_for(double metric_accuracy, double hesitation_rate);

/// Balanced corpus with pairs_per_cell headlines in each of the 24
/// category x sentiment x group x status cells. Headline order is shuffled
/// with `seed`. Throws InvalidArgument when pairs_per_cell is 0.
Corpus generate_corpus(std::size_t pairs_per_cell, std::uint64_t seed);

/// Accuracy of `spec` on a headline after bias and framing shifts.
double effective_accuracy(const SyntheticResponderSpec& spec, const Headline& h);

/// One row per member (ids from the specs, in order), likert scale.
ResponseMatrix simulate_responses(const CrowdSpec& crowd, const Corpus& corpus, std::uint64_t seed);

std::vector<ResponderProfile> crowd_profiles(const CrowdSpec& crowd);

/// Mean pairwise Q over the responders of a matrix (NaN when all pairs are degenerate).
double mean_pairwise_q(const ResponseMatrix& responses, const Corpus& corpus);

struct CalibrationResult {
  double rho = 0.0;
  double achieved_q = 0.0;
};

inline constexpr int kCalibrationSeeds = 20;
inline constexpr double kCalibrationTolerance = 0.02;

/// Bisection on rho so that a 4-member crowd of copies of `member` reaches
/// mean pairwise Q of `target_q` (averaged over 20 seeds on a generated
/// corpus with pairs_per_cell pairs per cell). Throws Unachievable when the
/// target lies below the rho = 0 baseline or the bisection cannot get within
/// 0.02 of it.
CalibrationResult calibrate_correlation(double target_q, const SyntheticResponderSpec& member,
                                        std::size_t pairs_per_cell, std::uint64_t seed);

}  // namespace hybridcrowd
