#include "hybridcrowd/dataset.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "hybridcrowd/error.hpp"
#include "hybridcrowd/random.hpp"

namespace hybridcrowd {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::age: return "age";
    case Category::gender: return "gender";
    case Category::ethnicity: return "ethnicity";
  }
  return "?";
}

std::string_view to_string(Group g) {
  switch (g) {
    case Group::man: return "man";
    case Group::woman: return "woman";
    case Group::young: return "young";
    case Group::old: return "old";
    case Group::white: return "white";
    case Group::african_american: return "african_american";
  }
  return "?";
}

std::string_view to_string(Sentiment s) {
  return s == Sentiment::positive ? "positive" : "negative";
}

std::string_view to_string(Status s) { return s == Status::genuine ? "genuine" : "altered"; }

std::string_view to_string(ResponderKind k) {
  switch (k) {
    case ResponderKind::human: return "human";
    case ResponderKind::llm: return "llm";
    case ResponderKind::synthetic: return "synthetic";
  }
  return "?";
}

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view text, const std::array<Enum, N>& values) {
  for (const Enum v : values) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Category> parse_category(std::string_view text) {
  return parse_enum(text, kCategories);
}
std::optional<Group> parse_group(std::string_view text) { return parse_enum(text, kGroups); }
std::optional<Sentiment> parse_sentiment(std::string_view text) {
  return parse_enum(text, kSentiments);
}
std::optional<Status> parse_status(std::string_view text) { return parse_enum(text, kStatuses); }
std::optional<ResponderKind> parse_responder_kind(std::string_view text) {
  constexpr std::array kinds{ResponderKind::human, ResponderKind::llm, ResponderKind::synthetic};
  return parse_enum(text, kinds);
}

Category category_of(Group g) {
  switch (g) {
    case Group::man:
    case Group::woman: return Category::gender;
    case Group::young:
    case Group::old: return Category::age;
    case Group::white:
    case Group::african_american: return Category::ethnicity;
  }
  return Category::age;
}

Group complement(Group g) {
  switch (g) {
    case Group::man: return Group::woman;
    case Group::woman: return Group::man;
    case Group::young: return Group::old;
    case Group::old: return Group::young;
    case Group::white: return Group::african_american;
    case Group::african_american: return Group::white;
  }
  return g;
}

Group privileged_group(Category c) {
  switch (c) {
    case Category::age: return Group::old;
    case Category::gender: return Group::man;
    case Category::ethnicity: return Group::white;
  }
  return Group::old;
}

std::array<Group, 2> groups_of(Category c) {
  const Group p = privileged_group(c);
  return {p, complement(p)};
}

Status opposite(Status s) { return s == Status::genuine ? Status::altered : Status::genuine; }

// ---------------------------------------------------------------- Corpus

Corpus Corpus::create(std::vector<Headline> headlines, std::string metadata) {
  Corpus corpus;
  corpus.headlines_ = std::move(headlines);
  corpus.metadata_ = std::move(metadata);
  const auto n = corpus.headlines_.size();

  corpus.index_.reserve(n);
  std::uint64_t fp = hash_string("corpus");
  for (std::size_t i = 0; i < n; ++i) {
    const Headline& h = corpus.headlines_[i];
    if (h.id.empty()) throw InvariantError("headline at position " + std::to_string(i) + " has an empty id");
    if (!corpus.index_.emplace(h.id, i).second) {
      throw InvariantError("duplicate headline id '" + h.id + "'");
    }
    if (category_of(h.group) != h.category) {
      throw InvariantError("headline '" + h.id + "': group " + std::string(to_string(h.group)) +
                           " does not belong to category " +
                           std::string(to_string(h.category)));
    }
    fp = derive_seed(fp, h.id);
  }
  corpus.fingerprint_ = fp;

  corpus.partner_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Headline& h = corpus.headlines_[i];
    const auto it = corpus.index_.find(h.partner_id);
    if (it == corpus.index_.end()) {
      throw InvariantError("headline '" + h.id + "': partner id '" + h.partner_id +
                           "' does not resolve");
    }
    if (it->second == i) throw InvariantError("headline '" + h.id + "' is its own partner");
    const Headline& p = corpus.headlines_[it->second];
    if (p.partner_id != h.id) {
      throw InvariantError("partner link of '" + h.id + "' is not an involution ('" + p.id +
                           "' points to '" + p.partner_id + "')");
    }
    if (p.group != complement(h.group) || p.sentiment != h.sentiment ||
        p.status != opposite(h.status)) {
      throw InvariantError("'" + h.id + "' and '" + p.id +
                           "' are not counterfactual variants (need complementary group, same "
                           "sentiment, opposite status)");
    }
    corpus.partner_[i] = it->second;
  }

  // Balance check over the 24 category x status x sentiment x group cells.
  std::map<std::tuple<Category, Status, Sentiment, Group>, std::size_t> cells;
  for (const Category c : kCategories) {
    for (const Status s : kStatuses) {
      for (const Sentiment se : kSentiments) {
        for (const Group g : groups_of(c)) cells[{c, s, se, g}] = 0;
      }
    }
  }
  for (const Headline& h : corpus.headlines_) ++cells[{h.category, h.status, h.sentiment, h.group}];
  std::size_t max_count = 0;
  for (const auto& [key, count] : cells) max_count = std::max(max_count, count);
  for (const auto& [key, count] : cells) {
    if (count != max_count) {
      const auto& [c, s, se, g] = key;
      corpus.warnings_.push_back("ImbalanceWarning: cell " + std::string(to_string(c)) + "/" +
                                 std::string(to_string(s)) + "/" + std::string(to_string(se)) +
                                 "/" + std::string(to_string(g)) + " has " +
                                 std::to_string(count) + " headlines, largest cell has " +
                                 std::to_string(max_count));
    }
  }
  return corpus;
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Corpus::require_index(std::string_view id) const {
  if (auto i = index_of(id)) return *i;
  throw UnknownId("unknown headline id '" + std::string(id) + "'");
}

std::vector<std::pair<std::size_t, std::size_t>> Corpus::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(size() / 2);
  for (std::size_t i = 0; i < size(); ++i) {
    if (i < partner_[i]) out.emplace_back(i, partner_[i]);
  }
  return out;
}

const Headline& counterfactual_partner(const Corpus& corpus, std::string_view id) {
  return corpus[corpus.partner_index(corpus.require_index(id))];
}

// ---------------------------------------------------------------- Likert

double likert_to_likelihood(int label) {
  if (label < 1 || label > 5) {
    throw OutOfRange("likert label " + std::to_string(label) + " outside 1..5");
  }
  return (label - 1) / 4.0;
}

std::optional<int> likelihood_to_likert(double likelihood) {
  if (!(likelihood >= 0.0 && likelihood <= 1.0)) return std::nullopt;
  const double scaled = likelihood * 4.0;
  const double rounded = std::round(scaled);
  if (scaled != rounded) return std::nullopt;
  return static_cast<int>(rounded) + 1;
}

bool on_likert_grid(double likelihood) { return likelihood_to_likert(likelihood).has_value(); }

// ---------------------------------------------------------------- ResponseMatrix

std::optional<std::size_t> ResponseMatrix::responder_index(std::string_view id) const {
  const auto it = responder_index_.find(std::string(id));
  if (it == responder_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ResponseMatrix::require_responder(std::string_view id) const {
  if (auto r = responder_index(id)) return *r;
  throw UnknownResponder("unknown responder '" + std::string(id) + "'");
}

std::size_t ResponseMatrix::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double v) { return !is_missing(v); }));
}

void ResponseMatrix::check_aligned(const Corpus& corpus) const {
  if (corpus_fingerprint_ != corpus.fingerprint() || headline_count_ != corpus.size()) {
    throw InvalidArgument("response matrix was not built against this corpus");
  }
}

ResponseMatrixBuilder::ResponseMatrixBuilder(const Corpus& corpus, LikelihoodScale scale)
    : corpus_(&corpus) {
  matrix_.headline_count_ = corpus.size();
  matrix_.scale_ = scale;
  matrix_.corpus_fingerprint_ = corpus.fingerprint();
}

std::size_t ResponseMatrixBuilder::add_responder(const std::string& id) {
  if (id.empty()) throw InvariantError("responder id must not be empty");
  const auto [it, inserted] = matrix_.responder_index_.emplace(id, matrix_.responders_.size());
  if (inserted) {
    matrix_.responders_.push_back(id);
    matrix_.values_.resize(matrix_.values_.size() + matrix_.headline_count_, kMissing);
  }
  return it->second;
}

void ResponseMatrixBuilder::set(std::string_view responder_id, std::string_view headline_id,
                                double likelihood) {
  const auto r = matrix_.responder_index(responder_id);
  if (!r) throw InvariantError("response references unknown responder '" + std::string(responder_id) + "'");
  const auto h = corpus_->index_of(headline_id);
  if (!h) throw InvariantError("response references unknown headline '" + std::string(headline_id) + "'");
  set(*r, *h, likelihood);
}

void ResponseMatrixBuilder::set(std::size_t responder, std::size_t headline, double likelihood) {
  if (responder >= matrix_.responders_.size() || headline >= matrix_.headline_count_) {
    throw InvariantError("response cell out of range");
  }
  if (is_missing(likelihood)) {
    matrix_.values_[responder * matrix_.headline_count_ + headline] = kMissing;
    return;
  }
  if (!(likelihood >= 0.0 && likelihood <= 1.0)) {
    throw InvariantError("likelihood " + std::to_string(likelihood) + " outside [0, 1]");
  }
  if (matrix_.scale_ == LikelihoodScale::likert && !on_likert_grid(likelihood)) {
    throw InvariantError("likelihood " + std::to_string(likelihood) +
                         " is not on the {0, 0.25, 0.5, 0.75, 1} grid");
  }
  matrix_.values_[responder * matrix_.headline_count_ + headline] = likelihood;
}

bool ResponseMatrixBuilder::has(std::size_t responder, std::size_t headline) const {
  return !is_missing(matrix_.values_[responder * matrix_.headline_count_ + headline]);
}

ResponseMatrix ResponseMatrixBuilder::build() && { return std::move(matrix_); }

ResponseMatrix merge(const Corpus& corpus, std::span<const ResponseMatrix> parts) {
  LikelihoodScale scale = LikelihoodScale::likert;
  for (const auto& part : parts) {
    part.check_aligned(corpus);
    if (part.scale() == LikelihoodScale::continuous) scale = LikelihoodScale::continuous;
  }
  ResponseMatrixBuilder builder(corpus, scale);
  std::size_t expected = 0;
  for (const auto& part : parts) {
    for (std::size_t r = 0; r < part.responder_count(); ++r) {
      const auto& id = part.responder_ids()[r];
      const std::size_t dst = builder.add_responder(id);
      if (dst != expected++) {
        throw InvariantError("responder '" + id + "' appears in more than one matrix");
      }
      for (std::size_t h = 0; h < part.headline_count(); ++h) builder.set(dst, h, part.at(r, h));
    }
  }
  return std::move(builder).build();
}

ResponseMatrix select_responders(const Corpus& corpus, const ResponseMatrix& source,
                                 std::span<const std::string> responder_ids) {
  source.check_aligned(corpus);
  ResponseMatrixBuilder builder(corpus, source.scale());
  for (const auto& id : responder_ids) {
    const auto src = source.require_responder(id);
    const auto dst = builder.add_responder(id);
    for (std::size_t h = 0; h < source.headline_count(); ++h) builder.set(dst, h, source.at(src, h));
  }
  return std::move(builder).build();
}

// ---------------------------------------------------------------- folds

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(std::max(k, 0)), 0);
  for (const int f : fold_of) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

std::vector<int> assign_subset_folds(const Corpus& corpus, std::span<const std::size_t> indices,
                                     int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("fold count must be at least 2, got " + std::to_string(k));
  std::unordered_map<std::size_t, std::size_t> position;
  position.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) position.emplace(indices[i], i);

  // Units: positions dealt as one block (a pair or a lone headline).
  std::vector<std::vector<std::size_t>> units;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto partner = position.find(corpus.partner_index(indices[i]));
    if (partner == position.end()) {
      units.push_back({i});
    } else if (i < partner->second) {
      units.push_back({i, partner->second});
    }
  }
  if (units.size() < static_cast<std::size_t>(k)) {
    throw TooFewPairs("need at least " + std::to_string(k) + " counterfactual pairs, found " +
                      std::to_string(units.size()));
  }
  Rng rng(seed);
  rng.shuffle(units);
  std::vector<int> folds(indices.size(), 0);
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (const std::size_t i : units[u]) folds[i] = static_cast<int>(u % static_cast<std::size_t>(k));
  }
  return folds;
}

FoldAssignment make_folds(const Corpus& corpus, int k, std::uint64_t seed) {
  std::vector<std::size_t> all(corpus.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  FoldAssignment out;
  out.k = k;
  out.fold_of = assign_subset_folds(corpus, all, k, seed);
  out.corpus_fingerprint = corpus.fingerprint();
  return out;
}

}  // namespace hybridcrowd
