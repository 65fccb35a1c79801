#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hybridcrowd/dataset.hpp"
#include "hybridcrowd/stats.hpp"

namespace hybridcrowd {

/// Any combination of filters; an empty selector matches the whole corpus.
struct SubsetSelector {
  std::optional<Category> category;
  std::optional<Status> status;
  std::optional<Sentiment> sentiment;
  std::optional<Group> group;

  bool matches(const Headline& h) const {
    return (!category || h.category == *category) && (!status || h.status == *status) &&
           (!sentiment || h.sentiment == *sentiment) && (!group || h.group == *group);
  }
};

/// Credit for one answer: 1 when the likelihood leans toward the true status,
/// 0 when it leans away, 0.5 at exactly 0.5.
double correctness(Status truth, double likelihood);

/// Per-headline correctness aligned with corpus order; NaN where the
/// likelihood is missing. `likelihoods` must be aligned with the corpus.
std::vector<double> correctness_vector(std::span<const double> likelihoods, const Corpus& corpus);
/// Throws UnknownResponder.
std::vector<double> correctness_vector(const ResponseMatrix& responses, const Corpus& corpus,
                                       std::string_view responder);

/// Mean correctness over answered headlines matching `selector`.
/// Throws EmptySubset when nothing answered matches.
double accuracy(std::span<const double> likelihoods, const Corpus& corpus,
                const SubsetSelector& selector = {});
double accuracy(const ResponseMatrix& responses, const Corpus& corpus, std::string_view responder,
                const SubsetSelector& selector = {});

struct BiasResult {
  double delta = 0.0;
  double p_value = 1.0;
  std::size_t n_g = 0;
  std::size_t n_g_prime = 0;
  TestMethod method = TestMethod::exact;
};

/// Mean likelihood over H_{status,sentiment,g} minus the mean over
/// H_{status,sentiment,g'}, with a two-sided Mann-Whitney p-value on the two
/// likelihood samples. Missing answers are excluded. Throws GroupMismatch
/// unless g' is the complement of g, EmptySubset when a side has no answers.
BiasResult counterfactual_bias(std::span<const double> likelihoods, const Corpus& corpus,
                               Status status, Sentiment sentiment, Group g, Group g_prime);
BiasResult counterfactual_bias(const ResponseMatrix& responses, const Corpus& corpus,
                               std::string_view responder, Status status, Sentiment sentiment,
                               Group g, Group g_prime);

struct FramingResult {
  double delta_f = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  TestMethod method = TestMethod::exact;
};

/// Mean over answered h in H_{sentiment,g} of p_h - (1 - p_partner(h)), with a
/// Wilcoxon signed-rank p-value on those differences. When every difference
/// is zero the p-value is 1. Throws MissingPartnerResponse when an answered
/// headline's partner is unanswered, EmptySubset when nothing is answered.
FramingResult framing_effect(std::span<const double> likelihoods, const Corpus& corpus,
                             Sentiment sentiment, Group g,
                             ZeroMethod zeros = ZeroMethod::discard);
FramingResult framing_effect(const ResponseMatrix& responses, const Corpus& corpus,
                             std::string_view responder, Sentiment sentiment, Group g,
                             ZeroMethod zeros = ZeroMethod::discard);

struct ContingencyTable {
  std::size_t n11 = 0;  // both correct
  std::size_t n00 = 0;  // both wrong
  std::size_t n10 = 0;  // first correct, second wrong
  std::size_t n01 = 0;  // first wrong, second correct

  std::size_t total() const { return n11 + n00 + n10 + n01; }
};

/// Counts over positions where both correctness values are exactly 0 or 1;
/// missing and half-credit entries are excluded.
ContingencyTable contingency_table(std::span<const double> correct_a,
                                   std::span<const double> correct_b);

/// Yule's Q = (N11 N00 - N10 N01) / (N11 N00 + N10 N01).
/// Throws DegenerateTable when the denominator is zero.
double q_statistic(const ContingencyTable& table);
double q_statistic(std::span<const double> correct_a, std::span<const double> correct_b);

struct QMatrix {
  std::vector<std::string> responder_ids;
  std::vector<double> values;  // row-major; NaN where the table is degenerate

  double at(std::size_t i, std::size_t j) const { return values[i * responder_ids.size() + j]; }
};

/// Pairwise Q over all responders of a matrix (diagonal set to 1).
QMatrix pairwise_q(const ResponseMatrix& responses, const Corpus& corpus);

struct QSummary {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t pairs = 0;  // non-degenerate pairs contributing
};

/// Mean and standard deviation of Q over the unordered pairs (i, j), i != j,
/// for which `include(i, j)` holds; degenerate pairs are skipped.
template <typename Predicate>
QSummary summarize_q(const QMatrix& q, Predicate include) {
  const std::size_t n = q.responder_ids.size();
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = q.at(i, j);
      if (is_missing(v) || !include(i, j)) continue;
      sum += v;
      sum_sq += v * v;
      ++count;
    }
  }
  QSummary s;
  s.pairs = count;
  if (count == 0) {
    s.mean = kMissing;
    s.stddev = kMissing;
    return s;
  }
  s.mean = sum / static_cast<double>(count);
  s.stddev = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(count) - s.mean * s.mean));
  return s;
}

/// Significance band for the report shading thresholds.
enum class SignificanceBand { p001, p005, p010, ns };
SignificanceBand significance_band(double p_value);
std::string_view to_string(SignificanceBand b);
std::optional<SignificanceBand> parse_significance_band(std::string_view text);

}  // namespace hybridcrowd
