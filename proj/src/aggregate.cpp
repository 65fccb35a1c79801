#include "hybridcrowd/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hybridcrowd/error.hpp"
#include "hybridcrowd/random.hpp"
#include "hybridcrowd/simplex.hpp"

namespace hybridcrowd {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(AggregatorKind k) {
  switch (k) {
    case AggregatorKind::simple_average: return "simple_average";
    case AggregatorKind::weighted_average: return "weighted_average";
    case AggregatorKind::expertise_tree: return "expertise_tree";
  }
  return "?";
}

std::optional<AggregatorKind> parse_aggregator_kind(std::string_view text) {
  for (const auto k : {AggregatorKind::simple_average, AggregatorKind::weighted_average,
                       AggregatorKind::expertise_tree}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view display_name(AggregatorKind k) {
  switch (k) {
    case AggregatorKind::simple_average: return "average";
    case AggregatorKind::weighted_average: return "WeightedAverage";
    case AggregatorKind::expertise_tree: return "ExpertiseTree";
  }
  return "?";
}

double simple_average(std::span<const double> predictions) {
  double sum = 0.0;
  std::size_t count = 0;
  double lo = 1.0;
  double hi = 0.0;
  for (const double p : predictions) {
    if (is_missing(p)) continue;
    sum += p;
    lo = std::min(lo, p);
    hi = std::max(hi, p);
    ++count;
  }
  if (count == 0) throw NoPredictions("no member prediction to average");
  return std::clamp(sum / static_cast<double>(count), lo, hi);
}

std::vector<double> status_targets(const Corpus& corpus) {
  std::vector<double> t(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) t[i] = corpus[i].status == Status::genuine ? 1.0 : 0.0;
  return t;
}

namespace {

// Complete-case training rows: headline index, member predictions, target.
struct Design {
  std::size_t dim = 0;
  std::vector<std::size_t> headlines;
  std::vector<double> rows;  // headlines.size() x dim
  std::vector<double> targets;

  std::size_t size() const { return headlines.size(); }
  const double* row(std::size_t r) const { return rows.data() + r * dim; }
};

std::vector<std::size_t> member_rows(const ResponseMatrix& responses,
                                     std::span<const std::string> member_ids) {
  if (member_ids.empty()) throw InvalidArgument("aggregation needs at least one member");
  std::vector<std::size_t> rows;
  rows.reserve(member_ids.size());
  for (const auto& id : member_ids) rows.push_back(responses.require_responder(id));
  return rows;
}

Design build_design(const ResponseMatrix& responses, const Corpus& corpus,
                    std::span<const std::string> member_ids, std::span<const double> targets) {
  responses.check_aligned(corpus);
  if (targets.size() != corpus.size()) throw InvalidArgument("targets not aligned with corpus");
  const auto rows = member_rows(responses, member_ids);
  Design d;
  d.dim = rows.size();
  std::vector<bool> answered_any(rows.size(), false);
  for (std::size_t h = 0; h < corpus.size(); ++h) {
    if (is_missing(targets[h])) continue;
    bool complete = true;
    for (std::size_t m = 0; m < rows.size(); ++m) {
      if (is_missing(responses.at(rows[m], h))) {
        complete = false;
      } else {
        answered_any[m] = true;
      }
    }
    if (!complete) continue;
    d.headlines.push_back(h);
    for (const auto r : rows) d.rows.push_back(responses.at(r, h));
    d.targets.push_back(targets[h]);
  }
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (!answered_any[m]) {
      throw InsufficientData("member '" + member_ids[m] + "' answered no training headline");
    }
  }
  return d;
}

struct SolverSettings {
  double ridge = 0.0;
  int max_iterations = 10000;
  double tolerance = 1e-9;
};

std::vector<double> fit_rows(const Design& d, std::span<const std::size_t> subset,
                             const SolverSettings& s) {
  if (subset.size() < 2) {
    throw InsufficientData("need at least 2 complete training headlines, have " +
                           std::to_string(subset.size()));
  }
  std::vector<double> rows;
  std::vector<double> targets;
  rows.reserve(subset.size() * d.dim);
  targets.reserve(subset.size());
  for (const auto r : subset) {
    rows.insert(rows.end(), d.row(r), d.row(r) + d.dim);
    targets.push_back(d.targets[r]);
  }
  const auto moments = least_squares_moments(rows, d.dim, targets);
  SimplexSolverOptions options;
  options.ridge = s.ridge;
  options.max_iterations = s.max_iterations;
  options.tolerance = s.tolerance;
  return solve_simplex_least_squares(moments, options).weights;
}

std::vector<std::size_t> all_rows(const Design& d) {
  std::vector<std::size_t> v(d.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

double dot(const std::vector<double>& w, const double* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

bool contains(const std::vector<Category>& set, Category c) {
  return std::find(set.begin(), set.end(), c) != set.end();
}

std::uint64_t context_tag(const std::vector<Category>& contexts) {
  std::uint64_t tag = 0;
  for (const auto c : contexts) tag |= std::uint64_t{1} << static_cast<int>(c);
  return tag;
}

class TreeGrower {
 public:
  TreeGrower(const Corpus& corpus, const Design& design, std::span<const std::string> members,
             const AggregatorSpec& spec)
      : corpus_(corpus), design_(design), members_(members.begin(), members.end()), spec_(spec) {
    settings_.ridge = spec.ridge_lambda;
    settings_.max_iterations = spec.max_iterations;
    settings_.tolerance = spec.tolerance;
  }

  ExpertiseTreeModel grow() {
    model_.member_ids = members_;
    std::vector<Category> root(kCategories.begin(), kCategories.end());
    grow_node(root, all_rows(design_));
    return std::move(model_);
  }

 private:
  int grow_node(const std::vector<Category>& contexts, const std::vector<std::size_t>& rows) {
    const int index = static_cast<int>(model_.nodes.size());
    model_.nodes.push_back(TreeNode{contexts, StackedWeights{members_, fit_rows(design_, rows, settings_)}, -1, -1});
    if (contexts.size() < 2 || !std::isfinite(spec_.split_epsilon)) return index;

    const std::uint64_t seed = derive_seed(spec_.seed, context_tag(contexts));
    double base_loss = 0.0;
    try {
      base_loss = cv_loss(rows, {contexts}, seed);
    } catch (const InsufficientData&) {
      return index;
    } catch (const TooFewPairs&) {
      return index;
    }

    std::optional<std::pair<std::vector<Category>, std::vector<Category>>> best;
    double best_loss = std::numeric_limits<double>::infinity();
    const std::size_t free_bits = contexts.size() - 1;
    for (std::uint64_t mask = 0; mask + 1 < (std::uint64_t{1} << free_bits); ++mask) {
      std::vector<Category> a{contexts[0]};
      std::vector<Category> b;
      for (std::size_t i = 1; i < contexts.size(); ++i) {
        ((mask >> (i - 1)) & 1 ? a : b).push_back(contexts[i]);
      }
      double loss = 0.0;
      try {
        loss = cv_loss(rows, {a, b}, seed);
      } catch (const InsufficientData&) {
        continue;
      }
      if (loss < best_loss) {
        best_loss = loss;
        best = std::make_pair(std::move(a), std::move(b));
      }
    }
    if (!best || !(base_loss - best_loss > spec_.split_epsilon)) return index;

    const auto left_rows = restrict(rows, best->first);
    const auto right_rows = restrict(rows, best->second);
    const int left = grow_node(best->first, left_rows);
    const int right = grow_node(best->second, right_rows);
    TreeNode& node = model_.nodes[static_cast<std::size_t>(index)];
    node.leaf.reset();
    node.left = left;
    node.right = right;
    return index;
  }

  std::vector<std::size_t> restrict(const std::vector<std::size_t>& rows,
                                    const std::vector<Category>& contexts) const {
    std::vector<std::size_t> out;
    for (const auto r : rows) {
      if (contains(contexts, corpus_[design_.headlines[r]].category)) out.push_back(r);
    }
    return out;
  }

  // Mean squared error of inner-fold predictions when each part of
  // `partition` gets its own stacking model.
  double cv_loss(const std::vector<std::size_t>& rows,
                 const std::vector<std::vector<Category>>& partition, std::uint64_t seed) const {
    std::vector<std::size_t> headline_ids(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) headline_ids[i] = design_.headlines[rows[i]];
    const auto folds = assign_subset_folds(corpus_, headline_ids, spec_.inner_folds, seed);

    double sse = 0.0;
    for (const auto& part : partition) {
      std::vector<std::size_t> part_positions;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (contains(part, corpus_[headline_ids[i]].category)) part_positions.push_back(i);
      }
      if (part_positions.empty()) throw InsufficientData("empty partition side");
      for (int f = 0; f < spec_.inner_folds; ++f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
        for (const auto i : part_positions) (folds[i] == f ? test : train).push_back(rows[i]);
        if (test.empty()) continue;
        const auto w = fit_rows(design_, train, settings_);
        for (const auto r : test) {
          const double e = dot(w, design_.row(r)) - design_.targets[r];
          sse += e * e;
        }
      }
    }
    return sse / static_cast<double>(rows.size());
  }

  const Corpus& corpus_;
  const Design& design_;
  std::vector<std::string> members_;
  const AggregatorSpec& spec_;
  SolverSettings settings_;
  ExpertiseTreeModel model_;
};

std::vector<double> gather(const ResponseMatrix& responses, std::span<const std::size_t> rows,
                           std::size_t headline) {
  std::vector<double> out(rows.size());
  for (std::size_t m = 0; m < rows.size(); ++m) out[m] = responses.at(rows[m], headline);
  return out;
}

}  // namespace

StackedWeights fit_stacked(const ResponseMatrix& responses, const Corpus& corpus,
                           std::span<const std::string> member_ids,
                           std::span<const double> targets, double ridge_lambda,
                           int max_iterations, double tolerance) {
  const Design design = build_design(responses, corpus, member_ids, targets);
  SolverSettings s{ridge_lambda, max_iterations, tolerance};
  return StackedWeights{{member_ids.begin(), member_ids.end()}, fit_rows(design, all_rows(design), s)};
}

double predict_stacked(const StackedWeights& model, std::span<const double> predictions,
                       bool renormalize_missing) {
  if (predictions.size() != model.weights.size()) {
    throw InvalidArgument("prediction count does not match model members");
  }
  double sum = 0.0;
  double weight = 0.0;
  double lo = 1.0;
  double hi = 0.0;
  for (std::size_t m = 0; m < predictions.size(); ++m) {
    const double w = model.weights[m];
    if (w == 0.0) continue;
    const double p = predictions[m];
    if (is_missing(p)) {
      if (renormalize_missing) continue;
      throw MissingMemberPrediction("member '" + model.member_ids[m] +
                                    "' has weight but no prediction");
    }
    sum += w * p;
    weight += w;
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  if (weight == 0.0) {
    if (renormalize_missing) return kMissing;
    throw MissingMemberPrediction("no weighted member has a prediction");
  }
  const double value = renormalize_missing ? sum / weight : sum;
  return std::clamp(value, lo, hi);
}

std::size_t ExpertiseTreeModel::split_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

std::size_t ExpertiseTreeModel::leaf_count() const { return nodes.size() - split_count(); }

const StackedWeights& ExpertiseTreeModel::route(Category context) const {
  if (nodes.empty() || !contains(nodes.front().contexts, context)) {
    throw UnroutableContext("context '" + std::string(to_string(context)) +
                            "' is not covered by the tree");
  }
  std::size_t at = 0;
  for (std::size_t guard = 0; guard <= nodes.size(); ++guard) {
    const TreeNode& node = nodes[at];
    if (node.is_leaf()) return *node.leaf;
    const auto next = [&](int child) -> std::optional<std::size_t> {
      if (child < 0 || static_cast<std::size_t>(child) >= nodes.size()) return std::nullopt;
      if (!contains(nodes[static_cast<std::size_t>(child)].contexts, context)) return std::nullopt;
      return static_cast<std::size_t>(child);
    };
    if (auto l = next(node.left)) {
      at = *l;
    } else if (auto r = next(node.right)) {
      at = *r;
    } else {
      throw UnroutableContext("context '" + std::string(to_string(context)) +
                              "' matches no child of an internal node");
    }
  }
  throw UnroutableContext("tree contains a cycle");
}

ExpertiseTreeModel fit_expertise_tree(const ResponseMatrix& responses, const Corpus& corpus,
                                      std::span<const std::string> member_ids,
                                      std::span<const double> targets,
                                      const AggregatorSpec& spec) {
  if (spec.inner_folds < 2) throw InvalidArgument("inner_folds must be at least 2");
  if (spec.split_epsilon < 0.0) throw InvalidArgument("split_epsilon must be non-negative");
  const Design design = build_design(responses, corpus, member_ids, targets);
  return TreeGrower(corpus, design, member_ids, spec).grow();
}

double predict_tree(const ExpertiseTreeModel& model, Category context,
                    std::span<const double> predictions, bool renormalize_missing) {
  return predict_stacked(model.route(context), predictions, renormalize_missing);
}

CvResult cv_evaluate(const AggregatorSpec& spec, const Corpus& corpus,
                     const ResponseMatrix& responses, std::span<const std::string> member_ids,
                     const FoldAssignment& folds) {
  responses.check_aligned(corpus);
  if (folds.corpus_fingerprint != corpus.fingerprint() || folds.fold_of.size() != corpus.size()) {
    throw InvalidArgument("fold assignment was not made for this corpus");
  }
  const auto rows = member_rows(responses, member_ids);
  CvResult result;
  result.predictions.assign(corpus.size(), kMissing);

  if (spec.kind == AggregatorKind::simple_average) {
    for (std::size_t h = 0; h < corpus.size(); ++h) {
      const auto p = gather(responses, rows, h);
      if (std::any_of(p.begin(), p.end(), [](double v) { return !is_missing(v); })) {
        result.predictions[h] = simple_average(p);
      }
    }
    result.fold_models.assign(static_cast<std::size_t>(folds.k), std::monostate{});
    return result;
  }

  const auto targets = status_targets(corpus);
  for (int f = 0; f < folds.k; ++f) {
    std::vector<double> train = targets;
    for (std::size_t h = 0; h < corpus.size(); ++h) {
      if (folds.fold_of[h] == f) train[h] = kMissing;
    }
    if (spec.kind == AggregatorKind::weighted_average) {
      auto model = fit_stacked(responses, corpus, member_ids, train, spec.ridge_lambda,
                               spec.max_iterations, spec.tolerance);
      for (std::size_t h = 0; h < corpus.size(); ++h) {
        if (folds.fold_of[h] != f) continue;
        result.predictions[h] = predict_stacked(model, gather(responses, rows, h), spec.renormalize_missing);
      }
      result.fold_models.emplace_back(std::move(model));
    } else {
      AggregatorSpec fold_spec = spec;
      fold_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(f));
      auto model = fit_expertise_tree(responses, corpus, member_ids, train, fold_spec);
      for (std::size_t h = 0; h < corpus.size(); ++h) {
        if (folds.fold_of[h] != f) continue;
        result.predictions[h] =
            predict_tree(model, corpus[h].category, gather(responses, rows, h), spec.renormalize_missing);
      }
      result.fold_models.emplace_back(std::move(model));
    }
  }
  return result;
}

// ---------------------------------------------------------------- serialization

ordered_json to_json(const StackedWeights& weights) {
  ordered_json doc;
  doc["kind"] = "stacked_weights";
  doc["member_ids"] = weights.member_ids;
  doc["weights"] = weights.weights;
  return doc;
}

ordered_json to_json(const ExpertiseTreeModel& model) {
  ordered_json doc;
  doc["kind"] = "expertise_tree";
  doc["member_ids"] = model.member_ids;
  auto& nodes = doc["nodes"] = ordered_json::array();
  for (const auto& node : model.nodes) {
    ordered_json n;
    auto& contexts = n["contexts"] = ordered_json::array();
    for (const auto c : node.contexts) contexts.push_back(to_string(c));
    if (node.is_leaf()) {
      n["weights"] = node.leaf->weights;
    } else {
      n["left"] = node.left;
      n["right"] = node.right;
    }
    nodes.push_back(std::move(n));
  }
  return doc;
}

StackedWeights stacked_weights_from_json(const json& doc) {
  try {
    StackedWeights w;
    w.member_ids = doc.at("member_ids").get<std::vector<std::string>>();
    w.weights = doc.at("weights").get<std::vector<double>>();
    if (w.member_ids.size() != w.weights.size()) throw ParseError("member/weight count mismatch");
    return w;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed stacked weights: ") + e.what());
  }
}

ExpertiseTreeModel expertise_tree_from_json(const json& doc) {
  try {
    ExpertiseTreeModel model;
    model.member_ids = doc.at("member_ids").get<std::vector<std::string>>();
    for (const auto& n : doc.at("nodes")) {
      TreeNode node;
      for (const auto& c : n.at("contexts")) {
        const auto category = parse_category(c.get<std::string>());
        if (!category) throw ParseError("unknown context '" + c.get<std::string>() + "'");
        node.contexts.push_back(*category);
      }
      if (n.contains("weights")) {
        node.leaf = StackedWeights{model.member_ids, n.at("weights").get<std::vector<double>>()};
        if (node.leaf->weights.size() != model.member_ids.size()) {
          throw ParseError("leaf weight count does not match members");
        }
      } else {
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
      }
      model.nodes.push_back(std::move(node));
    }
    if (model.nodes.empty()) throw ParseError("tree has no nodes");
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed expertise tree: ") + e.what());
  }
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
  ordered_json doc;
  if (const auto* w = std::get_if<StackedWeights>(&model)) {
    doc = to_json(*w);
  } else if (const auto* t = std::get_if<ExpertiseTreeModel>(&model)) {
    doc = to_json(*t);
  } else {
    doc["kind"] = "simple_average";
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

FittedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
  const std::string kind = doc.value("kind", "");
  if (kind == "stacked_weights") return stacked_weights_from_json(doc);
  if (kind == "expertise_tree") return expertise_tree_from_json(doc);
  if (kind == "simple_average") return std::monostate{};
  throw ParseError("unknown model kind '" + kind + "'");
}

}  // namespace hybridcrowd
