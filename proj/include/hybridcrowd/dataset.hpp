#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hybridcrowd {

enum class Category { age, gender, ethnicity };
enum class Group { man, woman, young, old, white, african_american };
enum class Sentiment { positive, negative };
enum class Status { genuine, altered };

inline constexpr std::array<Category, 3> kCategories{Category::age, Category::gender,
                                                     Category::ethnicity};
inline constexpr std::array<Sentiment, 2> kSentiments{Sentiment::positive, Sentiment::negative};
inline constexpr std::array<Status, 2> kStatuses{Status::genuine, Status::altered};
inline constexpr std::array<Group, 6> kGroups{Group::man,   Group::woman, Group::young,
                                              Group::old,   Group::white, Group::african_american};

std::string_view to_string(Category c);
std::string_view to_string(Group g);
std::string_view to_string(Sentiment s);
std::string_view to_string(Status s);

std::optional<Category> parse_category(std::string_view text);
std::optional<Group> parse_group(std::string_view text);
std::optional<Sentiment> parse_sentiment(std::string_view text);
std::optional<Status> parse_status(std::string_view text);

Category category_of(Group g);
/// man<->woman, young<->old, white<->african_american.
Group complement(Group g);
/// The historically privileged group of a category (man, old, white); the
/// reference side for reported counterfactual bias.
Group privileged_group(Category c);
/// The two groups of a category, privileged first.
std::array<Group, 2> groups_of(Category c);
Status opposite(Status s);

/// Missing likelihoods are stored as quiet NaN.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double p) { return std::isnan(p); }

struct Headline {
  std::string id;
  std::string text;
  Category category = Category::age;
  Group group = Group::young;
  Sentiment sentiment = Sentiment::positive;
  Status status = Status::genuine;
  std::string partner_id;

  friend bool operator==(const Headline&, const Headline&) = default;
};

/// Validated, immutable collection of counterfactual headline pairs.
class Corpus {
 public:
  Corpus() = default;

  /// Validates every headline and pair invariant; throws InvariantError on
  /// duplicate ids, dangling partners, self-partners, non-involutive links,
  /// group/category mismatches, or partners that are not the counterfactual
  /// (complementary group, same sentiment, opposite status). Imbalance across
  /// category x status x sentiment x group cells is reported via warnings().
  static Corpus create(std::vector<Headline> headlines, std::string metadata = {});

  std::size_t size() const { return headlines_.size(); }
  bool empty() const { return headlines_.empty(); }
  std::span<const Headline> headlines() const { return headlines_; }
  const Headline& operator[](std::size_t i) const { return headlines_[i]; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  /// Throws UnknownId.
  std::size_t require_index(std::string_view id) const;
  const Headline& at(std::string_view id) const { return headlines_[require_index(id)]; }

  std::size_t partner_index(std::size_t i) const { return partner_[i]; }

  /// Each pair once as (lower index, higher index), ordered by lower index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;

  const std::string& metadata() const { return metadata_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  /// Hash of the ordered id list; response data carries it to prove alignment.
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  std::vector<Headline> headlines_;
  std::vector<std::size_t> partner_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string metadata_;
  std::vector<std::string> warnings_;
  std::uint64_t fingerprint_ = 0;
};

/// Returns the counterfactual partner of `id`. Throws UnknownId.
const Headline& counterfactual_partner(const Corpus& corpus, std::string_view id);

enum class ResponderKind { human, llm, synthetic };
std::string_view to_string(ResponderKind k);
std::optional<ResponderKind> parse_responder_kind(std::string_view text);

struct ResponderProfile {
  std::string id;
  ResponderKind kind = ResponderKind::human;
  std::optional<double> benchmark_score;  // MMLU, in [0, 100]

  friend bool operator==(const ResponderProfile&, const ResponderProfile&) = default;
};

/// Likert label 1..5 to likelihood (label - 1) / 4. Throws OutOfRange.
double likert_to_likelihood(int label);
/// Inverse of likert_to_likelihood; nullopt for off-grid likelihoods.
std::optional<int> likelihood_to_likert(double likelihood);
bool on_likert_grid(double likelihood);

/// Raw elicited data lives on the five-point grid; aggregates are continuous.
enum class LikelihoodScale { likert, continuous };

/// Responder x headline grid of likelihoods, column order = corpus order.
/// Missing cells are NaN. Immutable once built; see ResponseMatrixBuilder.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;

  std::size_t responder_count() const { return responders_.size(); }
  std::size_t headline_count() const { return headline_count_; }
  const std::vector<std::string>& responder_ids() const { return responders_; }
  LikelihoodScale scale() const { return scale_; }
  std::uint64_t corpus_fingerprint() const { return corpus_fingerprint_; }

  std::optional<std::size_t> responder_index(std::string_view id) const;
  /// Throws UnknownResponder.
  std::size_t require_responder(std::string_view id) const;

  std::span<const double> row(std::size_t responder) const {
    return {values_.data() + responder * headline_count_, headline_count_};
  }
  std::span<const double> row(std::string_view responder_id) const {
    return row(require_responder(responder_id));
  }
  double at(std::size_t responder, std::size_t headline) const {
    return values_[responder * headline_count_ + headline];
  }
  std::size_t present_count() const;

  /// Throws InvalidArgument when the matrix was not built against `corpus`.
  void check_aligned(const Corpus& corpus) const;

 private:
  friend class ResponseMatrixBuilder;
  std::vector<std::string> responders_;
  std::unordered_map<std::string, std::size_t> responder_index_;
  std::vector<double> values_;
  std::size_t headline_count_ = 0;
  LikelihoodScale scale_ = LikelihoodScale::likert;
  std::uint64_t corpus_fingerprint_ = 0;
};

class ResponseMatrixBuilder {
 public:
  explicit ResponseMatrixBuilder(const Corpus& corpus,
                                 LikelihoodScale scale = LikelihoodScale::likert);

  /// Registers a responder (no-op when already present) and returns its row.
  std::size_t add_responder(const std::string& id);
  /// Stores a likelihood; InvariantError for unknown headline/responder,
  /// off-grid likert values or values outside [0, 1].
  void set(std::string_view responder_id, std::string_view headline_id, double likelihood);
  void set(std::size_t responder, std::size_t headline, double likelihood);
  bool has(std::size_t responder, std::size_t headline) const;

  ResponseMatrix build() &&;

 private:
  const Corpus* corpus_;
  ResponseMatrix matrix_;
};

/// Merges matrices over the same corpus; responder ids must be disjoint.
ResponseMatrix merge(const Corpus& corpus, std::span<const ResponseMatrix> parts);

/// Extracts the listed responders into a new matrix (order as given).
ResponseMatrix select_responders(const Corpus& corpus, const ResponseMatrix& source,
                                 std::span<const std::string> responder_ids);

/// Pair-coupled cross-validation folds; fold_of is aligned with corpus order.
struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;
  std::uint64_t corpus_fingerprint = 0;

  int fold(const Corpus& corpus, std::string_view headline_id) const {
    return fold_of[corpus.require_index(headline_id)];
  }
  std::vector<std::size_t> fold_sizes() const;
};

/// Shuffles counterfactual pairs with `seed` and deals them round-robin into
/// k folds, so partners share a fold and fold sizes differ by at most one
/// pair. Throws InvalidArgument for k < 2 and TooFewPairs when the corpus has
/// fewer than k pairs.
FoldAssignment make_folds(const Corpus& corpus, int k, std::uint64_t seed);

/// Fold labels for a subset of headline indices, aligned with `indices`.
/// Headlines whose partner is also in the subset are dealt together; a
/// headline without its partner forms its own unit. Throws TooFewPairs when
/// there are fewer than k units.
std::vector<int> assign_subset_folds(const Corpus& corpus, std::span<const std::size_t> indices,
                                     int k, std::uint64_t seed);

}  // namespace hybridcrowd
