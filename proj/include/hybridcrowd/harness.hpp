#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybridcrowd/aggregate.hpp"
#include "hybridcrowd/dataset.hpp"
#include "hybridcrowd/metrics.hpp"
#include "hybridcrowd/report.hpp"

namespace hybridcrowd {

enum class SamplingKind { random, benchmark_top };
std::string_view to_string(SamplingKind k);
std::optional<SamplingKind> parse_sampling_kind(std::string_view text);

struct SamplingPolicy {
  SamplingKind kind = SamplingKind::random;
  std::uint64_t seed = 0;
};

/// random: uniform without replacement. benchmark_top: the `size` highest
/// benchmark scores, ties broken by id. Throws PoolTooSmall and, for
/// benchmark_top, MissingScores.
std::vector<std::string> sample_group(std::span<const ResponderProfile> pool, std::size_t size,
                                      const SamplingPolicy& policy);

struct HybridSpec {
  double llm_fraction = 0.5;
  SamplingPolicy llm_policy;
  SamplingPolicy human_policy;
};

/// LLM share of a hybrid group: size * fraction rounded half-up.
std::size_t hybrid_llm_count(std::size_t size, double llm_fraction);

/// LLMs first (via llm_policy), then humans (via human_policy).
std::vector<std::string> compose_hybrid(std::span<const ResponderProfile> llm_pool,
                                        std::span<const ResponderProfile> human_pool,
                                        std::size_t size, const HybridSpec& spec);

enum class GroupType { llm, human, hybrid, llm_plus, hybrid_plus };
inline constexpr std::array<GroupType, 5> kGroupTypes{GroupType::llm, GroupType::human,
                                                      GroupType::hybrid, GroupType::llm_plus,
                                                      GroupType::hybrid_plus};
/// "LLM", "human", "hybrid", "LLM+", "hybrid+".
std::string_view to_string(GroupType t);
/// Accepts the display names and llm, human, hybrid, llm_plus, hybrid_plus.
std::optional<GroupType> parse_group_type(std::string_view text);

struct Pools {
  std::vector<ResponderProfile> llms;
  std::vector<ResponderProfile> humans;

  /// Splits profiles by kind; synthetic responders count as humans.
  static Pools from_profiles(std::span<const ResponderProfile> profiles);
};

/// Members of one sampled group of the given type.
std::vector<std::string> draw_group(const Pools& pools, GroupType type, std::size_t size,
                                    double llm_fraction, std::uint64_t seed);

/// Out-of-fold accuracy of an aggregator over the given members.
double aggregate_accuracy(const AggregatorSpec& spec, const Corpus& corpus,
                          const ResponseMatrix& responses, std::span<const std::string> members,
                          const FoldAssignment& folds);

struct SweepConfig {
  std::vector<std::size_t> sizes{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  std::size_t repeats = 100;
  std::vector<GroupType> group_types{GroupType::llm, GroupType::human, GroupType::hybrid};
  std::vector<AggregatorSpec> aggregators{AggregatorSpec{}};
  double llm_fraction = 0.5;
  std::uint64_t seed = 0;
  std::size_t bootstrap_resamples = 10000;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

/// Percentile bootstrap interval for the mean.
Interval bootstrap_mean_interval(std::span<const double> values, std::size_t resamples,
                                 double level, std::uint64_t seed);

/// One cell per (group type, size, aggregator) in that nesting order. Each
/// repeat samples a fresh group shared by all aggregators.
std::vector<SweepCell> run_size_sweep(const Corpus& corpus, const ResponseMatrix& responses,
                                      const Pools& pools, const FoldAssignment& folds,
                                      const SweepConfig& config);

/// Report column order: category (age, ethnicity, gender) x status
/// (altered, genuine).
std::vector<std::pair<Category, Status>> report_columns();

struct BiasReportConfig {
  std::vector<GroupType> group_types{GroupType::llm, GroupType::human, GroupType::hybrid,
                                     GroupType::llm_plus, GroupType::hybrid_plus};
  std::vector<AggregatorSpec> aggregators{AggregatorSpec{}};
  std::size_t group_size = 8;
  std::size_t repeats = 100;
  double llm_fraction = 0.5;
  std::uint64_t seed = 0;
  bool include_individuals = true;
  bool include_populations = true;
  unsigned threads = 0;
};

/// Cells for one likelihood row (counterfactual bias with the privileged
/// group as g, positive sentiment).
std::vector<BiasCell> likelihood_row_cells(std::span<const double> likelihoods, const Corpus& corpus);

/// Cells pooling every response of the given responders.
std::vector<BiasCell> pooled_row_cells(const ResponseMatrix& responses, const Corpus& corpus,
                                       std::span<const std::string> responders);

/// Population rows ("human", "LLM"), optional per-responder rows, then one
/// row per aggregator x group type. With repeats > 1, accuracies and deltas
/// are averaged over sampled groups and the p-value is their median.
std::vector<BiasRow> build_bias_report(const Corpus& corpus, const ResponseMatrix& responses,
                                       const Pools& pools, const FoldAssignment& folds,
                                       const BiasReportConfig& config);

/// Accuracy of each responder under each target_str variant, read verbatim.
std::vector<PromptVariantRow> prompt_variant_rows(
    const Corpus& corpus, std::span<const std::string> target_variants,
    std::span<const ResponseMatrix> matrices);

struct FramingRow {
  std::string responder;
  Category category = Category::age;
  Sentiment sentiment = Sentiment::positive;
  Group group = Group::young;
  double delta_f = kMissing;
  double p_value = kMissing;
  std::size_t n = 0;
};

struct Evaluation {
  std::vector<BiasRow> responders;
  std::vector<FramingRow> framing;
  QMatrix q;
  QSummary within_human;
  QSummary within_llm;
  QSummary cross;
};

Evaluation evaluate_responders(const Corpus& corpus, const ResponseMatrix& responses,
                               std::span<const ResponderProfile> profiles);

/// Writes responders.csv, framing.csv, q_matrix.csv and q_summary.csv.
std::vector<std::filesystem::path> emit_evaluation(const Evaluation& evaluation,
                                                   const std::filesystem::path& dir);

/// Provenance block shared by every emitted manifest.
nlohmann::ordered_json aggregator_manifest(std::span<const AggregatorSpec> specs);

}  // namespace hybridcrowd
