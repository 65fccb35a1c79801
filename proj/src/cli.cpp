#include "hybridcrowd/cli.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "hybridcrowd/aggregate.hpp"
#include "hybridcrowd/dataset_io.hpp"
#include "hybridcrowd/elicit.hpp"
#include "hybridcrowd/error.hpp"
#include "hybridcrowd/harness.hpp"
#include "hybridcrowd/random.hpp"
#include "hybridcrowd/report.hpp"

namespace hybridcrowd {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  if (!doc.contains(key)) return empty;
  if (!doc.at(key).is_object()) throw ConfigError(std::string("config key '") + key + "' must be an object");
  return doc.at(key);
}

Category require_category(const std::string& text) {
  const auto c = parse_category(text);
  if (!c) throw ConfigError("unknown category '" + text + "'");
  return *c;
}

}  // namespace

SimulationPlan simulation_plan_from_json(const json& doc) {
  SimulationPlan plan;
  plan.pairs_per_cell = get_or<std::size_t>(doc, "pairs_per_cell", plan.pairs_per_cell);
  if (!doc.contains("crowds") || !doc.at("crowds").is_array() || doc.at("crowds").empty()) {
    throw ConfigError("simulate.crowds must be a non-empty array");
  }
  std::uint64_t crowd_index = 0;
  for (const auto& c : doc.at("crowds")) {
    const auto name = get_or<std::string>(c, "name", "crowd" + std::to_string(crowd_index));
    const auto size = get_or<std::size_t>(c, "size", 0);
    if (size == 0) throw ConfigError("crowd '" + name + "' needs a positive size");
    const auto kind_text = get_or<std::string>(c, "kind", "synthetic");
    const auto kind = parse_responder_kind(kind_text);
    if (!kind) throw ConfigError("unknown responder kind '" + kind_text + "'");

    SyntheticResponderSpec base;
    base.kind = *kind;
    base.base_accuracy = get_or(c, "base_accuracy", base.base_accuracy);
    base.correlation_rho = get_or(c, "correlation_rho", base.correlation_rho);
    base.hesitation_rate = get_or(c, "hesitation_rate", base.hesitation_rate);
    for (const auto& [key, value] : get_or<std::map<std::string, double>>(c, "bias_shift", {})) {
      base.bias_shift[require_category(key)] = value;
    }
    for (const auto& [key, value] : get_or<std::map<std::string, double>>(c, "framing_shift", {})) {
      const auto colon = key.find(':');
      const auto sentiment = parse_sentiment(colon == std::string::npos ? "" : key.substr(colon + 1));
      if (!sentiment) throw ConfigError("framing_shift keys look like 'gender:positive', got '" + key + "'");
      base.framing_shift[{require_category(key.substr(0, colon)), *sentiment}] = value;
    }
    for (const auto& [key, value] : get_or<std::map<std::string, double>>(c, "category_accuracy", {})) {
      const Category category = require_category(key);
      for (const auto s : kStatuses) {
        for (const auto sentiment : kSentiments) {
          for (const auto g : groups_of(category)) base.per_cell_accuracy[{category, s, sentiment, g}] = value;
        }
      }
    }
    const auto scores = get_or<std::vector<double>>(c, "benchmark_scores", {});
    if (!scores.empty() && scores.size() != size) {
      throw ConfigError("crowd '" + name + "' lists " + std::to_string(scores.size()) +
                        " benchmark scores for " + std::to_string(size) + " members");
    }

    CrowdSpec crowd;
    crowd.shared_noise_seed = crowd_index++;
    for (std::size_t i = 0; i < size; ++i) {
      char suffix[24];
      std::snprintf(suffix, sizeof suffix, "-%02zu", i + 1);
      SyntheticResponderSpec member = base;
      member.id = name + suffix;
      crowd.members.push_back(member);
      plan.profiles.push_back(ResponderProfile{
          member.id, member.kind, scores.empty() ? std::nullopt : std::optional<double>(scores[i])});
    }
    plan.crowds.push_back(std::move(crowd));
  }
  return plan;
}

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> folds;
  std::vector<std::size_t> sizes;
  std::optional<std::size_t> repeats;
  std::string aggregators;
  std::string format;
  std::string out_dir;
  std::optional<unsigned> threads;
};

struct Run {
  std::string command;
  json config;
  fs::path base_dir;
  std::uint64_t seed = 0;
  int folds = 5;
  FileFormat format = FileFormat::csv;
  fs::path out_dir;
  unsigned threads = 0;
  Overrides overrides;

  fs::path resolve(const std::string& path) const {
    const fs::path p(path);
    return p.is_absolute() ? p : base_dir / p;
  }
};

struct Data {
  std::string source;
  Corpus corpus;
  ResponseMatrix responses;
  std::vector<ResponderProfile> profiles;
};

Run make_run(const std::string& command, const fs::path& config_path, const Overrides& o) {
  Run run;
  run.command = command;
  run.overrides = o;
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open run-config '" + config_path.string() + "'");
  try {
    run.config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("run-config is not valid JSON: " + std::string(e.what()));
  }
  if (!run.config.is_object()) throw ConfigError("run-config must be a JSON object");
  run.base_dir = config_path.parent_path();
  run.seed = o.seed.value_or(get_or<std::uint64_t>(run.config, "seed", 0));
  run.folds = o.folds.value_or(get_or<int>(run.config, "folds", 5));
  const auto format_text = o.format.empty() ? get_or<std::string>(run.config, "format", "csv") : o.format;
  const auto format = parse_file_format(format_text);
  if (!format) throw ConfigError("unknown format '" + format_text + "'");
  run.format = *format;
  run.out_dir = o.out_dir.empty() ? run.resolve(get_or<std::string>(run.config, "out_dir", "out"))
                                  : fs::path(o.out_dir);
  run.threads = o.threads.value_or(get_or<unsigned>(run.config, "threads", 0));
  return run;
}

std::vector<ResponderProfile> default_profiles(const ResponseMatrix& responses) {
  std::vector<ResponderProfile> out;
  for (const auto& id : responses.responder_ids()) out.push_back(ResponderProfile{id, ResponderKind::human, std::nullopt});
  return out;
}

Data load_data(const Run& run, std::ostream& err) {
  Data data;
  const json& cfg = run.config;
  if (cfg.contains("corpus")) {
    data.source = "files";
    const auto corpus_path = run.resolve(get_or<std::string>(cfg, "corpus", ""));
    data.corpus = load_corpus(corpus_path, format_from_extension(corpus_path));
    std::vector<std::string> paths;
    if (cfg.contains("responses") && cfg.at("responses").is_string()) {
      paths.push_back(cfg.at("responses").get<std::string>());
    } else {
      paths = get_or<std::vector<std::string>>(cfg, "responses", {});
    }
    std::vector<ResponseMatrix> parts;
    for (const auto& p : paths) parts.push_back(load_responses(run.resolve(p), data.corpus));
    data.responses = merge(data.corpus, parts);
    if (cfg.contains("profiles")) {
      auto profiles = load_profiles(run.resolve(get_or<std::string>(cfg, "profiles", "")));
      for (const auto& id : data.responses.responder_ids()) {
        if (std::none_of(profiles.begin(), profiles.end(), [&](const auto& p) { return p.id == id; })) {
          throw InvariantError("responder '" + id + "' has responses but no profile");
        }
      }
      for (const auto& p : profiles) {
        if (data.responses.responder_index(p.id)) {
          data.profiles.push_back(p);
        } else {
          err << "warning: profile '" << p.id << "' has no responses and is left out\n";
        }
      }
      std::vector<std::string> order;
      for (const auto& p : data.profiles) order.push_back(p.id);
      data.responses = select_responders(data.corpus, data.responses, order);
    } else {
      data.profiles = default_profiles(data.responses);
    }
  } else if (cfg.contains("simulate")) {
    data.source = "simulated";
    const auto plan = simulation_plan_from_json(section(cfg, "simulate"));
    data.corpus = generate_corpus(plan.pairs_per_cell, derive_seed(run.seed, "corpus"));
    std::vector<ResponseMatrix> parts;
    for (std::size_t i = 0; i < plan.crowds.size(); ++i) {
      parts.push_back(simulate_responses(plan.crowds[i], data.corpus,
                                         derive_seed(run.seed, "crowd/" + std::to_string(i))));
    }
    data.responses = merge(data.corpus, parts);
    data.profiles = plan.profiles;
  } else {
    throw ConfigError("run-config needs either 'corpus' or 'simulate'");
  }
  for (const auto& w : data.corpus.warnings()) err << "warning: " << w << '\n';
  return data;
}

std::vector<AggregatorSpec> aggregator_specs(const Run& run) {
  const json& cfg = run.config;
  const bool renormalize = get_or<bool>(cfg, "renormalize_missing", true);
  std::vector<AggregatorSpec> configured;
  if (cfg.contains("aggregators")) {
    if (!cfg.at("aggregators").is_array()) throw ConfigError("'aggregators' must be an array");
    for (const auto& a : cfg.at("aggregators")) {
      const json entry = a.is_string() ? json{{"kind", a}} : a;
      const auto kind_text = get_or<std::string>(entry, "kind", "");
      const auto kind = parse_aggregator_kind(kind_text);
      if (!kind) throw ConfigError("unknown aggregator kind '" + kind_text + "'");
      AggregatorSpec spec;
      spec.kind = *kind;
      spec.ridge_lambda = get_or(entry, "ridge_lambda", spec.ridge_lambda);
      if (entry.contains("split_epsilon") && entry.at("split_epsilon").is_string()) {
        if (entry.at("split_epsilon") != "inf") throw ConfigError("split_epsilon must be a number or \"inf\"");
        spec.split_epsilon = std::numeric_limits<double>::infinity();
      } else {
        spec.split_epsilon = get_or(entry, "split_epsilon", spec.split_epsilon);
      }
      spec.inner_folds = get_or(entry, "inner_folds", spec.inner_folds);
      spec.max_iterations = get_or(entry, "max_iterations", spec.max_iterations);
      spec.tolerance = get_or(entry, "tolerance", spec.tolerance);
      spec.renormalize_missing = get_or(entry, "renormalize_missing", renormalize);
      if (spec.ridge_lambda < 0.0) throw ConfigError("ridge_lambda must be non-negative");
      configured.push_back(spec);
    }
  } else {
    for (const auto kind : {AggregatorKind::simple_average, AggregatorKind::weighted_average,
                            AggregatorKind::expertise_tree}) {
      AggregatorSpec spec;
      spec.kind = kind;
      spec.renormalize_missing = renormalize;
      configured.push_back(spec);
    }
  }
  std::vector<AggregatorSpec> specs;
  if (run.overrides.aggregators.empty()) {
    specs = configured;
  } else {
    std::stringstream list(run.overrides.aggregators);
    std::string item;
    while (std::getline(list, item, ',')) {
      const auto kind = parse_aggregator_kind(item);
      if (!kind) throw ConfigError("unknown aggregator kind '" + item + "'");
      const auto it = std::find_if(configured.begin(), configured.end(),
                                   [&](const AggregatorSpec& s) { return s.kind == *kind; });
      AggregatorSpec spec;
      spec.kind = *kind;
      spec.renormalize_missing = renormalize;
      specs.push_back(it != configured.end() ? *it : spec);
    }
  }
  for (auto& s : specs) s.seed = derive_seed(run.seed, "inner-folds");
  if (specs.empty()) throw ConfigError("no aggregator selected");
  return specs;
}

std::vector<GroupType> group_types(const json& doc, std::vector<GroupType> fallback) {
  if (!doc.contains("group_types")) return fallback;
  std::vector<GroupType> out;
  for (const auto& name : get_or<std::vector<std::string>>(doc, "group_types", {})) {
    const auto t = parse_group_type(name);
    if (!t) throw ConfigError("unknown group type '" + name + "'");
    out.push_back(*t);
  }
  return out;
}

std::string hex(std::uint64_t v) {
  char buffer[20];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(v));
  return buffer;
}

ordered_json base_manifest(const Run& run, const Data& data) {
  ordered_json m;
  m["tool"] = "hybridcrowd";
  m["version"] = kVersion;
  m["command"] = run.command;
  m["seed"] = run.seed;
  ordered_json d;
  d["source"] = data.source;
  d["headlines"] = data.corpus.size();
  d["corpus_fingerprint"] = hex(data.corpus.fingerprint());
  d["responders"] = data.responses.responder_count();
  const Pools pools = Pools::from_profiles(data.profiles);
  d["llms"] = pools.llms.size();
  d["humans"] = pools.humans.size();
  m["data"] = d;
  ordered_json t;
  t["counterfactual_bias"] =
      "mean likelihood of the privileged group (age: old, ethnicity: white, gender: man) minus its "
      "complement on positive headlines; two-sided Mann-Whitney U, exact permutation distribution "
      "for combined size <= 12, otherwise tie-corrected normal approximation with continuity correction";
  t["framing_effect"] =
      "mean of p_h - (1 - p_partner); two-sided Wilcoxon signed-rank, zero differences discarded, "
      "exact for <= 12 nonzero differences";
  t["significance_bands"] = {"p<0.01", "p<0.05", "p<0.1", "ns"};
  t["accuracy"] = "1 toward the true status, 0 away, 0.5 for likelihood 0.5";
  m["metrics"] = t;
  return m;
}

FoldAssignment folds_for(const Run& run, const Corpus& corpus, ordered_json& manifest) {
  const std::uint64_t seed = derive_seed(run.seed, "folds");
  ordered_json f;
  f["k"] = run.folds;
  f["seed"] = seed;
  f["assignment"] = "counterfactual pairs shuffled and dealt round-robin";
  manifest["folds"] = f;
  return make_folds(corpus, run.folds, seed);
}

void print_written(std::ostream& out, const std::vector<fs::path>& files) {
  for (const auto& f : files) out << "wrote " << f.lexically_normal().string() << '\n';
}

int cmd_simulate(const Run& run, std::ostream& out, std::ostream& err) {
  if (!run.config.contains("simulate")) throw ConfigError("simulate needs a 'simulate' section");
  Run sim = run;
  sim.config.erase("corpus");
  const Data data = load_data(sim, err);
  fs::create_directories(run.out_dir);
  const fs::path corpus_path = run.out_dir / (run.format == FileFormat::json ? "corpus.json" : "corpus.csv");
  save_corpus(data.corpus, corpus_path, run.format);
  save_responses(data.responses, data.corpus, run.out_dir / "responses.csv");
  save_profiles(data.profiles, run.out_dir / "profiles.csv");
  ordered_json manifest = base_manifest(run, data);
  manifest["simulate"] = run.config.at("simulate");
  write_json_file(manifest, run.out_dir / "manifest.json");
  print_written(out, {corpus_path, run.out_dir / "responses.csv", run.out_dir / "profiles.csv",
                      run.out_dir / "manifest.json"});
  return 0;
}

int cmd_ingest(const Run& run, std::ostream& out, std::ostream& err) {
  const Data data = load_data(run, err);
  fs::create_directories(run.out_dir);
  const fs::path corpus_path = run.out_dir / (run.format == FileFormat::json ? "corpus.json" : "corpus.csv");
  save_corpus(data.corpus, corpus_path, run.format);
  save_responses(data.responses, data.corpus, run.out_dir / "responses.csv");
  save_profiles(data.profiles, run.out_dir / "profiles.csv");
  ordered_json manifest = base_manifest(run, data);
  manifest["data"]["present_responses"] = data.responses.present_count();
  manifest["data"]["pairs"] = data.corpus.pairs().size();
  manifest["warnings"] = data.corpus.warnings();
  write_json_file(manifest, run.out_dir / "manifest.json");
  out << data.corpus.size() << " headlines, " << data.responses.responder_count() << " responders, "
      << data.responses.present_count() << " responses\n";
  print_written(out, {corpus_path, run.out_dir / "responses.csv", run.out_dir / "profiles.csv",
                      run.out_dir / "manifest.json"});
  return 0;
}

int cmd_elicit(const Run& run, std::ostream& out, std::ostream& err) {
  const json& e = section(run.config, "elicit");
  Run corpus_only = run;
  const Data data = load_data(corpus_only, err);
  ElicitationConfig config;
  config.endpoint_url = get_or<std::string>(e, "endpoint_url", "");
  config.model_name = get_or<std::string>(e, "model", "");
  config.max_retries = get_or(e, "max_retries", config.max_retries);
  config.max_in_flight = get_or(e, "max_in_flight", config.max_in_flight);
  config.request_rate_limit = get_or(e, "rate_limit", config.request_rate_limit);
  config.cache_path = run.resolve(get_or<std::string>(e, "cache", "elicitation_cache.jsonl"));
  config.seed = derive_seed(run.seed, "examples");
  if (config.endpoint_url.empty()) throw ConfigError("elicit.endpoint_url is required");
  const EndpointAdapter adapter =
      e.contains("adapter") ? load_adapter(run.resolve(get_or<std::string>(e, "adapter", ""))) : EndpointAdapter{};
  std::vector<std::string> variants = get_or<std::vector<std::string>>(e, "variants", {"true"});

  HttpChatEndpoint endpoint(config.endpoint_url, adapter);
  const auto outcome = elicit_all(config, data.corpus, variants, endpoint);
  fs::create_directories(run.out_dir);
  std::vector<fs::path> written;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const fs::path path = run.out_dir / ("responses_" + variants[v] + ".csv");
    save_responses(outcome.matrices[v], data.corpus, path);
    written.push_back(path);
  }
  ordered_json manifest = base_manifest(run, data);
  ordered_json info;
  info["model"] = config.model_name;
  info["temperature"] = config.temperature;
  info["shots"] = kShotCount;
  info["variants"] = variants;
  info["max_retries"] = config.max_retries;
  info["example_seed"] = config.seed;
  info["requests"] = outcome.requests;
  info["cache_hits"] = outcome.cache_hits;
  info["missing_after_retries"] = outcome.refusals;
  manifest["elicit"] = info;
  write_json_file(manifest, run.out_dir / "manifest.json");
  written.push_back(run.out_dir / "manifest.json");
  print_written(out, written);
  return 0;
}

int cmd_evaluate(const Run& run, std::ostream& out, std::ostream& err) {
  const Data data = load_data(run, err);
  const auto evaluation = evaluate_responders(data.corpus, data.responses, data.profiles);
  auto written = emit_evaluation(evaluation, run.out_dir);
  ordered_json manifest = base_manifest(run, data);
  manifest["q_statistic"] = "Yule Q over binary correctness; answers of exactly 0.5 excluded";
  write_json_file(manifest, run.out_dir / "manifest.json");
  written.push_back(run.out_dir / "manifest.json");
  print_written(out, written);
  return 0;
}

SweepConfig sweep_config(const Run& run, std::vector<AggregatorSpec> specs) {
  const json& s = section(run.config, "sweep");
  SweepConfig config;
  if (!run.overrides.sizes.empty()) {
    config.sizes = run.overrides.sizes;
  } else {
    config.sizes = get_or(s, "sizes", config.sizes);
  }
  config.repeats = run.overrides.repeats.value_or(get_or(s, "repeats", config.repeats));
  config.group_types = group_types(s, config.group_types);
  config.llm_fraction = get_or(s, "llm_fraction", get_or(run.config, "llm_fraction", config.llm_fraction));
  config.bootstrap_resamples = get_or(s, "bootstrap_resamples", config.bootstrap_resamples);
  config.seed = derive_seed(run.seed, "sweep");
  config.threads = run.threads;
  config.aggregators = std::move(specs);
  return config;
}

int cmd_sweep(const Run& run, std::ostream& out, std::ostream& err) {
  const Data data = load_data(run, err);
  ordered_json manifest = base_manifest(run, data);
  const auto folds = folds_for(run, data.corpus, manifest);
  const auto config = sweep_config(run, aggregator_specs(run));
  ExperimentReport report;
  report.sweep = run_size_sweep(data.corpus, data.responses, Pools::from_profiles(data.profiles), folds, config);
  manifest["aggregators"] = aggregator_manifest(config.aggregators);
  ordered_json s;
  s["sizes"] = config.sizes;
  s["repeats"] = config.repeats;
  ordered_json types = ordered_json::array();
  for (const auto t : config.group_types) types.push_back(to_string(t));
  s["group_types"] = types;
  s["llm_fraction"] = config.llm_fraction;
  s["hybrid_rounding"] = "LLM count = floor(size * llm_fraction + 0.5)";
  s["seed"] = config.seed;
  s["interval"] = "percentile bootstrap of the mean over repeats";
  s["level"] = 0.95;
  s["bootstrap_resamples"] = config.bootstrap_resamples;
  manifest["sweep"] = s;
  report.manifest = manifest;
  print_written(out, emit_report(rounded(report), run.out_dir, run.format));
  return 0;
}

int cmd_report(const Run& run, std::ostream& out, std::ostream& err) {
  const Data data = load_data(run, err);
  ordered_json manifest = base_manifest(run, data);
  const auto folds = folds_for(run, data.corpus, manifest);
  const json& r = section(run.config, "report");
  BiasReportConfig config;
  config.aggregators = aggregator_specs(run);
  config.group_types = group_types(r, config.group_types);
  config.group_size = get_or(r, "group_size", config.group_size);
  config.repeats = run.overrides.repeats.value_or(get_or(r, "repeats", config.repeats));
  config.llm_fraction = get_or(r, "llm_fraction", get_or(run.config, "llm_fraction", config.llm_fraction));
  config.include_individuals = get_or(r, "include_individuals", config.include_individuals);
  config.include_populations = get_or(r, "include_populations", config.include_populations);
  config.seed = derive_seed(run.seed, "report");
  config.threads = run.threads;

  ExperimentReport report;
  report.bias_rows = build_bias_report(data.corpus, data.responses, Pools::from_profiles(data.profiles),
                                       folds, config);
  std::vector<std::string> variant_names;
  if (run.config.contains("prompt_variants")) {
    std::vector<ResponseMatrix> matrices;
    for (const auto& v : run.config.at("prompt_variants")) {
      variant_names.push_back(get_or<std::string>(v, "target_str", ""));
      matrices.push_back(load_responses(run.resolve(get_or<std::string>(v, "responses", "")), data.corpus));
    }
    report.prompt_variants = prompt_variant_rows(data.corpus, variant_names, matrices);
  }
  manifest["aggregators"] = aggregator_manifest(config.aggregators);
  ordered_json b;
  b["group_size"] = config.group_size;
  b["repeats"] = config.repeats;
  ordered_json types = ordered_json::array();
  for (const auto t : config.group_types) types.push_back(to_string(t));
  b["group_types"] = types;
  b["llm_fraction"] = config.llm_fraction;
  b["seed"] = config.seed;
  b["repeat_reduction"] = "mean accuracy and delta, median p-value";
  b["prompt_variants"] = variant_names;
  b["prompt_variant_reading"] = "labels recorded verbatim; 5 = very likely to be {target_str}";
  manifest["report"] = b;
  report.manifest = manifest;
  print_written(out, emit_report(rounded(report), run.out_dir, run.format));
  return 0;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::stringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) {
    const auto dash = item.find('-');
    try {
      if (dash != std::string::npos) {
        const auto lo = std::stoul(item.substr(0, dash));
        const auto hi = std::stoul(item.substr(dash + 1));
        for (auto s = lo; s <= hi; ++s) sizes.push_back(s);
      } else {
        sizes.push_back(std::stoul(item));
      }
    } catch (const std::logic_error&) {
      throw ConfigError("malformed --sizes entry '" + item + "'");
    }
  }
  return sizes;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crowd aggregation and bias audit for hybrid human-LLM crowds", "hybridcrowd"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;
  std::string sizes_text;
  std::uint64_t seed = 0;
  int folds = 0;
  std::size_t repeats = 0;
  unsigned threads = 0;

  const std::vector<std::pair<const char*, const char*>> commands{
      {"simulate", "generate a synthetic corpus, responses and profiles"},
      {"ingest", "validate corpus/response/profile files and write normalized copies"},
      {"elicit", "query a chat-completion endpoint with the 4-shot prompt"},
      {"evaluate", "per-responder accuracy, bias, framing effects and Q-statistics"},
      {"sweep", "group-size sweep with bootstrap intervals"},
      {"report", "bias report table"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "run-config JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "base seed");
    sub->add_option("--folds", folds, "cross-validation folds")->check(CLI::Range(2, 1000));
    sub->add_option("--sizes", sizes_text, "group sizes, e.g. 2,4,8 or 2-16");
    sub->add_option("--repeats", repeats, "sampled groups per cell")->check(CLI::PositiveNumber);
    sub->add_option("--aggregators", o.aggregators, "comma list of simple_average,weighted_average,expertise_tree");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out-dir", o.out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
    subs.push_back(sub);
  }

  std::vector<const char*> argv{"hybridcrowd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream o_out;
    std::ostringstream o_err;
    const int code = app.exit(e, o_out, o_err);
    out << o_out.str();
    err << o_err.str();
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = nullptr;
  for (auto* s : subs) {
    if (s->parsed()) chosen = s;
  }
  if (chosen->count("--seed")) o.seed = seed;
  if (chosen->count("--folds")) o.folds = folds;
  if (chosen->count("--repeats")) o.repeats = repeats;
  if (chosen->count("--threads")) o.threads = threads;

  try {
    if (!sizes_text.empty()) o.sizes = parse_sizes(sizes_text);
    const Run run = make_run(chosen->get_name(), config_path, o);
    const std::string& name = chosen->get_name();
    if (name == "simulate") return cmd_simulate(run, out, err);
    if (name == "ingest") return cmd_ingest(run, out, err);
    if (name == "elicit") return cmd_elicit(run, out, err);
    if (name == "evaluate") return cmd_evaluate(run, out, err);
    if (name == "sweep") return cmd_sweep(run, out, err);
    return cmd_report(run, out, err);
  } catch (const Error& e) {
    err << "error[" << e.kind() << "]: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error[IoError]: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    err << "error[ConfigError]: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace hybridcrowd
