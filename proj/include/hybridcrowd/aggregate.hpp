#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hybridcrowd/dataset.hpp"

namespace hybridcrowd {

/// Arithmetic mean of the present (non-NaN) predictions. Throws NoPredictions.
double simple_average(std::span<const double> predictions);

/// Constant per-member weights on the simplex.
struct StackedWeights {
  std::vector<std::string> member_ids;
  std::vector<double> weights;

  friend bool operator==(const StackedWeights&, const StackedWeights&) = default;
};

enum class AggregatorKind { simple_average, weighted_average, expertise_tree };
std::string_view to_string(AggregatorKind k);
std::optional<AggregatorKind> parse_aggregator_kind(std::string_view text);
/// Report label: "average", "WeightedAverage", "ExpertiseTree".
std::string_view display_name(AggregatorKind k);

struct AggregatorSpec {
  AggregatorKind kind = AggregatorKind::simple_average;
  double ridge_lambda = 1e-3;    // weighted_average, expertise_tree
  double split_epsilon = 1e-4;   // expertise_tree; MSE units
  int inner_folds = 3;           // expertise_tree
  std::uint64_t seed = 0;        // expertise_tree inner folds
  int max_iterations = 10000;
  double tolerance = 1e-9;
  /// When a weighted member has no prediction for a headline, renormalize
  /// over the present members instead of raising MissingMemberPrediction.
  bool renormalize_missing = false;
};

/// 1 for genuine, 0 for altered, aligned with corpus order.
std::vector<double> status_targets(const Corpus& corpus);

/// Fits simplex weights minimizing mean squared error of sum_m w_m p^m_h
/// against targets, plus ridge * ||w - uniform||^2. `targets` is aligned with
/// the corpus; NaN entries are not used for training. Only headlines that
/// every member answered are used. Throws InsufficientData with fewer than
/// two usable headlines or when a member answered none of the training
/// headlines.
StackedWeights fit_stacked(const ResponseMatrix& responses, const Corpus& corpus,
                           std::span<const std::string> member_ids,
                           std::span<const double> targets, double ridge_lambda,
                           int max_iterations = 10000, double tolerance = 1e-9);

/// Weighted mean of `predictions` (aligned with model.member_ids), clamped to
/// the range of the contributing predictions. Throws MissingMemberPrediction
/// when a member with nonzero weight has no prediction.
double predict_stacked(const StackedWeights& model, std::span<const double> predictions,
                       bool renormalize_missing = false);

struct TreeNode {
  std::vector<Category> contexts;        // categories routed to this node
  std::optional<StackedWeights> leaf;    // set on leaves only
  int left = -1;
  int right = -1;

  bool is_leaf() const { return leaf.has_value(); }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Context-splitting tree over headline category whose leaves hold stacked
/// weights. nodes[0] is the root.
struct ExpertiseTreeModel {
  std::vector<std::string> member_ids;
  std::vector<TreeNode> nodes;

  std::size_t split_count() const;
  std::size_t leaf_count() const;
  /// Throws UnroutableContext.
  const StackedWeights& route(Category context) const;

  friend bool operator==(const ExpertiseTreeModel&, const ExpertiseTreeModel&) = default;
};

/// Greedy tree growth: fit a root stacking model; score every bipartition of
/// the node's categories by inner cross-validated squared error against the
/// unsplit node; adopt the best split when it lowers the loss by more than
/// spec.split_epsilon and recurse into both sides.
ExpertiseTreeModel fit_expertise_tree(const ResponseMatrix& responses, const Corpus& corpus,
                                      std::span<const std::string> member_ids,
                                      std::span<const double> targets,
                                      const AggregatorSpec& spec);

double predict_tree(const ExpertiseTreeModel& model, Category context,
                    std::span<const double> predictions, bool renormalize_missing = false);

using FittedModel = std::variant<std::monostate, StackedWeights, ExpertiseTreeModel>;

struct CvResult {
  std::vector<double> predictions;       // one per headline, corpus order; NaN if unpredictable
  std::vector<FittedModel> fold_models;  // one per fold (monostate for simple averages)
};

/// Out-of-fold aggregation: for each fold, fit on the other folds and predict
/// the held-out headlines.
CvResult cv_evaluate(const AggregatorSpec& spec, const Corpus& corpus,
                     const ResponseMatrix& responses, std::span<const std::string> member_ids,
                     const FoldAssignment& folds);

nlohmann::ordered_json to_json(const StackedWeights& weights);
nlohmann::ordered_json to_json(const ExpertiseTreeModel& model);
StackedWeights stacked_weights_from_json(const nlohmann::json& doc);
ExpertiseTreeModel expertise_tree_from_json(const nlohmann::json& doc);

/// Writes/reads a fitted model file; the "kind" key tells the two apart.
void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace hybridcrowd
