#include "hybridcrowd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "hybridcrowd/error.hpp"
#include "hybridcrowd/format.hpp"
#include "hybridcrowd/random.hpp"

namespace hybridcrowd {

using nlohmann::ordered_json;

std::string_view to_string(SamplingKind k) {
  return k == SamplingKind::random ? "random" : "benchmark_top";
}

std::optional<SamplingKind> parse_sampling_kind(std::string_view text) {
  if (text == "random") return SamplingKind::random;
  if (text == "benchmark_top") return SamplingKind::benchmark_top;
  return std::nullopt;
}

std::vector<std::string> sample_group(std::span<const ResponderProfile> pool, std::size_t size,
                                      const SamplingPolicy& policy) {
  if (size > pool.size()) {
    throw PoolTooSmall("requested " + std::to_string(size) + " members from a pool of " +
                       std::to_string(pool.size()));
  }
  if (policy.kind == SamplingKind::random) {
    std::vector<std::string> ids;
    ids.reserve(pool.size());
    for (const auto& p : pool) ids.push_back(p.id);
    Rng rng(policy.seed);
    rng.shuffle(ids);
    ids.resize(size);
    return ids;
  }
  std::vector<const ResponderProfile*> ranked;
  for (const auto& p : pool) {
    if (!p.benchmark_score) throw MissingScores("responder '" + p.id + "' has no benchmark score");
    ranked.push_back(&p);
  }
  std::sort(ranked.begin(), ranked.end(), [](const ResponderProfile* a, const ResponderProfile* b) {
    if (*a->benchmark_score != *b->benchmark_score) return *a->benchmark_score > *b->benchmark_score;
    return a->id < b->id;
  });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < size; ++i) ids.push_back(ranked[i]->id);
  return ids;
}

std::size_t hybrid_llm_count(std::size_t size, double llm_fraction) {
  if (!(llm_fraction >= 0.0 && llm_fraction <= 1.0)) {
    throw InvalidArgument("llm_fraction must lie in [0, 1]");
  }
  return static_cast<std::size_t>(std::floor(static_cast<double>(size) * llm_fraction + 0.5));
}

std::vector<std::string> compose_hybrid(std::span<const ResponderProfile> llm_pool,
                                        std::span<const ResponderProfile> human_pool,
                                        std::size_t size, const HybridSpec& spec) {
  const std::size_t n_llm = hybrid_llm_count(size, spec.llm_fraction);
  const std::size_t n_human = size - n_llm;
  if (n_llm > llm_pool.size() || n_human > human_pool.size()) {
    throw PoolTooSmall("hybrid group of " + std::to_string(size) + " needs " +
                       std::to_string(n_llm) + " LLMs and " + std::to_string(n_human) +
                       " humans; pools hold " + std::to_string(llm_pool.size()) + " and " +
                       std::to_string(human_pool.size()));
  }
  auto members = sample_group(llm_pool, n_llm, spec.llm_policy);
  for (auto& id : sample_group(human_pool, n_human, spec.human_policy)) members.push_back(std::move(id));
  return members;
}

std::string_view to_string(GroupType t) {
  switch (t) {
    case GroupType::llm: return "LLM";
    case GroupType::human: return "human";
    case GroupType::hybrid: return "hybrid";
    case GroupType::llm_plus: return "LLM+";
    case GroupType::hybrid_plus: return "hybrid+";
  }
  return "?";
}

std::optional<GroupType> parse_group_type(std::string_view text) {
  static constexpr std::array<std::string_view, 5> kKeys{"llm", "human", "hybrid", "llm_plus",
                                                         "hybrid_plus"};
  for (std::size_t i = 0; i < kGroupTypes.size(); ++i) {
    if (text == to_string(kGroupTypes[i]) || text == kKeys[i]) return kGroupTypes[i];
  }
  return std::nullopt;
}

Pools Pools::from_profiles(std::span<const ResponderProfile> profiles) {
  Pools pools;
  for (const auto& p : profiles) (p.kind == ResponderKind::llm ? pools.llms : pools.humans).push_back(p);
  return pools;
}

std::vector<std::string> draw_group(const Pools& pools, GroupType type, std::size_t size,
                                    double llm_fraction, std::uint64_t seed) {
  const SamplingPolicy random_llm{SamplingKind::random, derive_seed(seed, "llm")};
  const SamplingPolicy random_human{SamplingKind::random, derive_seed(seed, "human")};
  const SamplingPolicy top_llm{SamplingKind::benchmark_top, 0};
  switch (type) {
    case GroupType::llm: return sample_group(pools.llms, size, random_llm);
    case GroupType::human: return sample_group(pools.humans, size, random_human);
    case GroupType::hybrid:
      return compose_hybrid(pools.llms, pools.humans, size, {llm_fraction, random_llm, random_human});
    case GroupType::llm_plus: return sample_group(pools.llms, size, top_llm);
    case GroupType::hybrid_plus:
      return compose_hybrid(pools.llms, pools.humans, size, {llm_fraction, top_llm, random_human});
  }
  throw InvalidArgument("unknown group type");
}

double aggregate_accuracy(const AggregatorSpec& spec, const Corpus& corpus,
                          const ResponseMatrix& responses, std::span<const std::string> members,
                          const FoldAssignment& folds) {
  return accuracy(cv_evaluate(spec, corpus, responses, members, folds).predictions, corpus);
}

namespace {

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first
// failure. Results must be written to per-index slots.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mutex;
  auto loop = [&] {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string cell_tag(std::string_view prefix, GroupType type, std::size_t size, std::size_t index) {
  return std::string(prefix) + "/" + std::string(to_string(type)) + "/" + std::to_string(size) +
         "/" + std::to_string(index);
}

double mean_of(std::span<const double> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const double v : values) {
    if (is_missing(v)) continue;
    sum += v;
    ++n;
  }
  return n == 0 ? kMissing : sum / static_cast<double>(n);
}

double median_of(std::vector<double> values) {
  std::erase_if(values, [](double v) { return is_missing(v); });
  if (values.empty()) return kMissing;
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw EmptySample("quantile of an empty sample");
  const double position = q * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  const double fraction = position - static_cast<double>(lower);
  return sorted[lower] + fraction * (sorted[upper] - sorted[lower]);
}

Interval bootstrap_mean_interval(std::span<const double> values, std::size_t resamples,
                                 double level, std::uint64_t seed) {
  if (values.empty()) throw EmptySample("bootstrap of an empty sample");
  if (resamples == 0) throw InvalidArgument("bootstrap needs at least one resample");
  const std::size_t n = values.size();
  std::vector<double> means(resamples);
  Rng rng(seed);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[rng.below(n)];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

std::vector<SweepCell> run_size_sweep(const Corpus& corpus, const ResponseMatrix& responses,
                                      const Pools& pools, const FoldAssignment& folds,
                                      const SweepConfig& config) {
  if (config.repeats == 0) throw InvalidArgument("repeats must be at least 1");
  if (config.aggregators.empty()) throw InvalidArgument("no aggregator requested");
  responses.check_aligned(corpus);

  struct Job {
    GroupType type;
    std::size_t size;
    std::size_t repeat;
  };
  std::vector<Job> jobs;
  for (const auto type : config.group_types) {
    for (const auto size : config.sizes) {
      if (size == 0) throw InvalidArgument("group size must be positive");
      for (std::size_t r = 0; r < config.repeats; ++r) jobs.push_back({type, size, r});
    }
  }
  const std::size_t n_agg = config.aggregators.size();
  std::vector<double> scores(jobs.size() * n_agg, kMissing);
  parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto members = draw_group(pools, job.type, job.size, config.llm_fraction,
                                    derive_seed(config.seed, cell_tag("group", job.type, job.size, job.repeat)));
    for (std::size_t a = 0; a < n_agg; ++a) {
      scores[j * n_agg + a] = aggregate_accuracy(config.aggregators[a], corpus, responses, members, folds);
    }
  });

  std::vector<SweepCell> cells;
  std::size_t base = 0;
  for (const auto type : config.group_types) {
    for (const auto size : config.sizes) {
      for (std::size_t a = 0; a < n_agg; ++a) {
        std::vector<double> values(config.repeats);
        for (std::size_t r = 0; r < config.repeats; ++r) values[r] = scores[(base + r) * n_agg + a];
        SweepCell cell;
        cell.group_type = std::string(to_string(type));
        cell.size = size;
        cell.aggregator = std::string(display_name(config.aggregators[a].kind));
        cell.repeats = config.repeats;
        cell.mean = mean_of(values);
        const auto interval = bootstrap_mean_interval(
            values, config.bootstrap_resamples, 0.95,
            derive_seed(config.seed, cell_tag("bootstrap", type, size, a)));
        cell.ci_low = interval.low;
        cell.ci_high = interval.high;
        cells.push_back(std::move(cell));
      }
      base += config.repeats;
    }
  }
  return cells;
}

std::vector<std::pair<Category, Status>> report_columns() {
  std::vector<std::pair<Category, Status>> columns;
  for (const auto c : {Category::age, Category::ethnicity, Category::gender}) {
    for (const auto s : {Status::altered, Status::genuine}) columns.emplace_back(c, s);
  }
  return columns;
}

namespace {

void set_bias(BiasCell& cell, double delta, double p_value) {
  cell.delta = delta;
  cell.p_value = p_value;
  if (!is_missing(p_value)) cell.band = significance_band(p_value);
}

}  // namespace

std::vector<BiasCell> likelihood_row_cells(std::span<const double> likelihoods, const Corpus& corpus) {
  std::vector<BiasCell> cells;
  for (const auto& [c, s] : report_columns()) {
    BiasCell cell;
    cell.category = c;
    cell.status = s;
    try {
      cell.accuracy = accuracy(likelihoods, corpus, SubsetSelector{c, s, std::nullopt, std::nullopt});
    } catch (const EmptySubset&) {
    }
    try {
      const Group g = privileged_group(c);
      const auto bias = counterfactual_bias(likelihoods, corpus, s, Sentiment::positive, g, complement(g));
      set_bias(cell, bias.delta, bias.p_value);
    } catch (const EmptySubset&) {
    }
    cells.push_back(cell);
  }
  BiasCell average;
  try {
    average.accuracy = accuracy(likelihoods, corpus);
  } catch (const EmptySubset&) {
  }
  cells.push_back(average);
  return cells;
}

std::vector<BiasCell> pooled_row_cells(const ResponseMatrix& responses, const Corpus& corpus,
                                       std::span<const std::string> responders) {
  responses.check_aligned(corpus);
  std::vector<std::size_t> rows;
  for (const auto& id : responders) rows.push_back(responses.require_responder(id));

  std::vector<BiasCell> cells;
  double total = 0.0;
  std::size_t total_n = 0;
  for (const auto& [c, s] : report_columns()) {
    BiasCell cell;
    cell.category = c;
    cell.status = s;
    const Group g = privileged_group(c);
    double correct = 0.0;
    std::size_t n = 0;
    std::vector<double> sample_g;
    std::vector<double> sample_g_prime;
    for (std::size_t h = 0; h < corpus.size(); ++h) {
      const Headline& headline = corpus[h];
      if (headline.category != c || headline.status != s) continue;
      for (const auto r : rows) {
        const double p = responses.at(r, h);
        if (is_missing(p)) continue;
        correct += correctness(s, p);
        ++n;
        if (headline.sentiment != Sentiment::positive) continue;
        (headline.group == g ? sample_g : sample_g_prime).push_back(p);
      }
    }
    if (n > 0) cell.accuracy = correct / static_cast<double>(n);
    total += correct;
    total_n += n;
    if (!sample_g.empty() && !sample_g_prime.empty()) {
      const auto test = mann_whitney_u(sample_g, sample_g_prime);
      set_bias(cell, mean_of(sample_g) - mean_of(sample_g_prime), test.p_value);
    }
    cells.push_back(cell);
  }
  BiasCell average;
  if (total_n > 0) average.accuracy = total / static_cast<double>(total_n);
  cells.push_back(average);
  return cells;
}

std::vector<BiasRow> build_bias_report(const Corpus& corpus, const ResponseMatrix& responses,
                                       const Pools& pools, const FoldAssignment& folds,
                                       const BiasReportConfig& config) {
  if (config.repeats == 0) throw InvalidArgument("repeats must be at least 1");
  responses.check_aligned(corpus);
  std::vector<BiasRow> rows;

  if (config.include_populations) {
    for (const auto& [label, pool] : {std::pair{"human", &pools.humans}, std::pair{"LLM", &pools.llms}}) {
      if (pool->empty()) continue;
      std::vector<std::string> ids;
      for (const auto& p : *pool) ids.push_back(p.id);
      rows.push_back(BiasRow{label, label, "population", 1, pooled_row_cells(responses, corpus, ids)});
    }
  }
  if (config.include_individuals) {
    for (std::size_t r = 0; r < responses.responder_count(); ++r) {
      rows.push_back(BiasRow{responses.responder_ids()[r], "", "individual", 1,
                             likelihood_row_cells(responses.row(r), corpus)});
    }
  }

  struct Job {
    std::size_t aggregator;
    GroupType type;
    std::size_t repeat;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < config.aggregators.size(); ++a) {
    for (const auto type : config.group_types) {
      for (std::size_t r = 0; r < config.repeats; ++r) jobs.push_back({a, type, r});
    }
  }
  std::vector<std::vector<BiasCell>> results(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto members =
        draw_group(pools, job.type, config.group_size, config.llm_fraction,
                   derive_seed(config.seed, cell_tag("bias", job.type, config.group_size, job.repeat)));
    const auto predictions =
        cv_evaluate(config.aggregators[job.aggregator], corpus, responses, members, folds).predictions;
    results[j] = likelihood_row_cells(predictions, corpus);
  });

  for (std::size_t start = 0; start < jobs.size(); start += config.repeats) {
    const Job& job = jobs[start];
    BiasRow row;
    row.aggregator = std::string(display_name(config.aggregators[job.aggregator].kind));
    row.group_type = std::string(to_string(job.type));
    row.label = row.aggregator + "(" + row.group_type + ")";
    row.repeats = config.repeats;
    const std::size_t n_cells = results[start].size();
    for (std::size_t c = 0; c < n_cells; ++c) {
      BiasCell cell = results[start][c];
      std::vector<double> acc;
      std::vector<double> delta;
      std::vector<double> p;
      for (std::size_t r = 0; r < config.repeats; ++r) {
        const BiasCell& x = results[start + r][c];
        acc.push_back(x.accuracy);
        delta.push_back(x.delta);
        p.push_back(x.p_value);
      }
      cell.accuracy = mean_of(acc);
      cell.band.reset();
      set_bias(cell, mean_of(delta), median_of(p));
      row.cells.push_back(cell);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<PromptVariantRow> prompt_variant_rows(const Corpus& corpus,
                                                  std::span<const std::string> target_variants,
                                                  std::span<const ResponseMatrix> matrices) {
  if (target_variants.size() != matrices.size()) {
    throw InvalidArgument("one response matrix per target variant is required");
  }
  std::vector<PromptVariantRow> rows;
  for (std::size_t v = 0; v < matrices.size(); ++v) {
    matrices[v].check_aligned(corpus);
    for (std::size_t r = 0; r < matrices[v].responder_count(); ++r) {
      PromptVariantRow row;
      row.responder = matrices[v].responder_ids()[r];
      row.target_str = target_variants[v];
      const auto likelihoods = matrices[v].row(r);
      row.answered = static_cast<std::size_t>(
          std::count_if(likelihoods.begin(), likelihoods.end(), [](double p) { return !is_missing(p); }));
      if (row.answered > 0) row.accuracy = accuracy(likelihoods, corpus);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

Evaluation evaluate_responders(const Corpus& corpus, const ResponseMatrix& responses,
                               std::span<const ResponderProfile> profiles) {
  responses.check_aligned(corpus);
  Evaluation e;
  const std::size_t n = responses.responder_count();
  std::vector<bool> is_llm(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& id = responses.responder_ids()[r];
    for (const auto& p : profiles) {
      if (p.id == id) is_llm[r] = p.kind == ResponderKind::llm;
    }
    e.responders.push_back(BiasRow{id, is_llm[r] ? "LLM" : "human", "individual", 1,
                                   likelihood_row_cells(responses.row(r), corpus)});
    for (const auto c : kCategories) {
      for (const auto s : kSentiments) {
        for (const auto g : groups_of(c)) {
          FramingRow row{id, c, s, g};
          try {
            const auto f = framing_effect(responses.row(r), corpus, s, g);
            row.delta_f = f.delta_f;
            row.p_value = f.p_value;
            row.n = f.n;
          } catch (const EmptySubset&) {
          } catch (const MissingPartnerResponse&) {
          }
          e.framing.push_back(row);
        }
      }
    }
  }
  e.q = pairwise_q(responses, corpus);
  e.within_human = summarize_q(e.q, [&](std::size_t i, std::size_t j) { return !is_llm[i] && !is_llm[j]; });
  e.within_llm = summarize_q(e.q, [&](std::size_t i, std::size_t j) { return is_llm[i] && is_llm[j]; });
  e.cross = summarize_q(e.q, [&](std::size_t i, std::size_t j) { return is_llm[i] != is_llm[j]; });
  return e;
}

namespace {

std::string fixed_or_empty(double v) { return is_missing(v) ? std::string() : format_fixed(v, 6); }

}  // namespace

std::vector<std::filesystem::path> emit_evaluation(const Evaluation& e,
                                                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : e.responders) {
    for (const auto& c : row.cells) {
      rows.push_back({row.label, row.group_type,
                      c.category ? std::string(to_string(*c.category)) : "all",
                      c.status ? std::string(to_string(*c.status)) : "all",
                      fixed_or_empty(c.accuracy), fixed_or_empty(c.delta),
                      fixed_or_empty(c.p_value), c.band ? std::string(to_string(*c.band)) : ""});
    }
  }
  write_csv_file(dir / "responders.csv",
                 {"responder", "kind", "category", "status", "accuracy", "delta", "p_value", "band"}, rows);

  rows.clear();
  for (const auto& f : e.framing) {
    rows.push_back({f.responder, std::string(to_string(f.category)), std::string(to_string(f.sentiment)),
                    std::string(to_string(f.group)), fixed_or_empty(f.delta_f),
                    fixed_or_empty(f.p_value),
                    is_missing(f.p_value) ? "" : std::string(to_string(significance_band(f.p_value))),
                    std::to_string(f.n)});
  }
  write_csv_file(dir / "framing.csv",
                 {"responder", "category", "sentiment", "group", "delta_f", "p_value", "band", "n"}, rows);

  rows.clear();
  std::vector<std::string> header{"responder"};
  for (const auto& id : e.q.responder_ids) header.push_back(id);
  for (std::size_t i = 0; i < e.q.responder_ids.size(); ++i) {
    std::vector<std::string> r{e.q.responder_ids[i]};
    for (std::size_t j = 0; j < e.q.responder_ids.size(); ++j) r.push_back(fixed_or_empty(e.q.at(i, j)));
    rows.push_back(std::move(r));
  }
  write_csv_file(dir / "q_matrix.csv", header, rows);

  rows.clear();
  for (const auto& [scope, s] : {std::pair{"within_human", &e.within_human},
                                 std::pair{"within_llm", &e.within_llm}, std::pair{"cross", &e.cross}}) {
    rows.push_back({scope, fixed_or_empty(s->mean), fixed_or_empty(s->stddev), std::to_string(s->pairs)});
  }
  write_csv_file(dir / "q_summary.csv", {"scope", "mean", "stddev", "pairs"}, rows);
  return {dir / "responders.csv", dir / "framing.csv", dir / "q_matrix.csv", dir / "q_summary.csv"};
}

ordered_json aggregator_manifest(std::span<const AggregatorSpec> specs) {
  ordered_json out = ordered_json::array();
  for (const auto& s : specs) {
    ordered_json a;
    a["kind"] = to_string(s.kind);
    a["label"] = display_name(s.kind);
    if (s.kind != AggregatorKind::simple_average) {
      a["loss"] = "mean squared error against status targets (genuine=1, altered=0)";
      a["constraint"] = "non-negative weights summing to 1, no intercept";
      a["ridge_lambda"] = s.ridge_lambda;
      a["ridge_center"] = "uniform weights";
      a["solver"] = "accelerated projected gradient with restart";
      a["max_iterations"] = s.max_iterations;
      a["tolerance"] = s.tolerance;
      a["renormalize_missing"] = s.renormalize_missing;
    }
    if (s.kind == AggregatorKind::expertise_tree) {
      a["context_feature"] = "category";
      a["split_criterion"] = "inner cross-validated squared error";
      a["split_epsilon"] = std::isfinite(s.split_epsilon) ? ordered_json(s.split_epsilon)
                                                          : ordered_json("inf");
      a["inner_folds"] = s.inner_folds;
      a["seed"] = s.seed;
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace hybridcrowd
