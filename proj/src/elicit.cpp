#include "hybridcrowd/elicit.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "hybridcrowd/error.hpp"
#include "hybridcrowd/random.hpp"

namespace hybridcrowd {

using nlohmann::json;
using nlohmann::ordered_json;

bool is_negated_target(std::string_view target_str) {
  return target_str == "fake" || target_str == "false" || target_str == "altered";
}

int expected_label(Status status, std::string_view target_str) {
  const bool high = (status == Status::genuine) != is_negated_target(target_str);
  return high ? 5 : 1;
}

std::array<std::size_t, kShotCount> select_examples(const Corpus& corpus, std::size_t query,
                                                    std::uint64_t seed) {
  const Headline& q = corpus[query];
  const std::size_t partner = corpus.partner_index(query);
  std::array<std::size_t, kShotCount> chosen{};
  Rng rng(derive_seed(seed, q.id));
  std::size_t slot = 0;
  for (const auto status : kStatuses) {
    for (const auto sentiment : kSentiments) {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const Headline& h = corpus[i];
        if (i == query || i == partner || h.category != q.category) continue;
        if (h.status == status && h.sentiment == sentiment) candidates.push_back(i);
      }
      if (candidates.empty()) {
        throw InsufficientExamples("no " + std::string(to_string(status)) + " " +
                                   std::string(to_string(sentiment)) + " " +
                                   std::string(to_string(q.category)) +
                                   " example available for '" + q.id + "'");
      }
      chosen[slot++] = candidates[rng.below(candidates.size())];
    }
  }
  for (std::size_t i = chosen.size(); i > 1; --i) std::swap(chosen[i - 1], chosen[rng.below(i)]);
  return chosen;
}

std::string render_prompt(const PromptTemplate& tmpl, const Headline& query,
                          std::span<const Headline> examples, std::span<const int> labels) {
  if (examples.size() != kShotCount || labels.size() != kShotCount) {
    throw BadArity("prompt needs exactly 4 examples and 4 labels, got " +
                   std::to_string(examples.size()) + " and " + std::to_string(labels.size()));
  }
  std::string out;
  out += "How likely is it that this headline is " + tmpl.target_str + ".\n";
  out += "\n";
  out += " Choose one of the following options and return only the number of that option:\n";
  out += "1. very unlikely, 2. unlikely, 3. undecided, 4. likely, 5. very likely.\n";
  out += "\n";
  out += "<examples>\n";
  for (std::size_t i = 0; i < kShotCount; ++i) {
    if (labels[i] < 1 || labels[i] > 5) throw OutOfRange("example label must be in 1..5");
    out += "\"" + examples[i].text + "\"\n";
    out += "Response: " + std::to_string(labels[i]) + "\n";
  }
  out += "</examples>\n";
  out += "\n";
  out += "\"" + query.text + "\"\n";
  out += "Response: ";
  return out;
}

std::string build_prompt(const Corpus& corpus, std::size_t query, std::string_view target_str,
                         std::uint64_t seed) {
  const auto picks = select_examples(corpus, query, seed);
  std::vector<Headline> examples;
  std::vector<int> labels;
  for (const auto i : picks) {
    examples.push_back(corpus[i]);
    labels.push_back(expected_label(corpus[i].status, target_str));
  }
  return render_prompt(PromptTemplate{std::string(target_str)}, corpus[query], examples, labels);
}

namespace {

constexpr std::array<std::string_view, 10> kDisclaimers{
    "as an ai",   "as a language model", "as an artificial", "i cannot",   "i can't",
    "i'm sorry",  "i am sorry",          "i am unable",      "i'm unable", "i apologize"};

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

ParsedResponse parse_response(std::string_view raw) {
  std::size_t start = 0;
  while (start < raw.size() &&
         (std::isspace(static_cast<unsigned char>(raw[start])) || raw[start] == '"' ||
          raw[start] == '*' || raw[start] == '\'')) {
    ++start;
  }
  std::string lowered;
  for (std::size_t i = start; i < raw.size() && lowered.size() < 32; ++i) {
    lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i])));
  }
  for (const auto d : kDisclaimers) {
    if (lowered.starts_with(d)) return {};
  }

  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c < '1' || c > '5') continue;
    const bool before_ok =
        i == 0 || (!is_alnum(raw[i - 1]) && !(raw[i - 1] == '.' && i >= 2 && is_digit(raw[i - 2])));
    const bool after_ok = i + 1 == raw.size() ||
                          (!is_alnum(raw[i + 1]) &&
                           !((raw[i + 1] == '.' || raw[i + 1] == ',') && i + 2 < raw.size() &&
                             is_digit(raw[i + 2])));
    if (before_ok && after_ok) return ParsedResponse{c - '0'};
  }
  return {};
}

// ---------------------------------------------------------------- HTTP

EndpointAdapter adapter_from_json(const json& doc) {
  EndpointAdapter a;
  try {
    a.path = doc.value("path", a.path);
    a.response_pointer = doc.value("response_pointer", a.response_pointer);
    a.api_key_env = doc.value("api_key_env", a.api_key_env);
    a.auth_header = doc.value("auth_header", a.auth_header);
    a.auth_prefix = doc.value("auth_prefix", a.auth_prefix);
    a.timeout_seconds = doc.value("timeout_seconds", a.timeout_seconds);
    if (doc.contains("extra_body")) a.extra_body = doc.at("extra_body");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed endpoint adapter: ") + e.what());
  }
  if (!a.extra_body.is_object()) throw ConfigError("adapter extra_body must be an object");
  return a;
}

EndpointAdapter load_adapter(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open adapter '" + path.string() + "'");
  try {
    return adapter_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("adapter '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

HttpChatEndpoint::HttpChatEndpoint(std::string base_url, EndpointAdapter adapter)
    : base_url_(std::move(base_url)), adapter_(std::move(adapter)) {
  if (!adapter_.api_key_env.empty()) {
    const char* key = std::getenv(adapter_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("environment variable " + adapter_.api_key_env + " is not set");
    }
    api_key_ = key;
  }
}

std::string HttpChatEndpoint::complete(const ChatRequest& request) {
  json body = adapter_.extra_body;
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  body["messages"] = json::array({json{{"role", "user"}, {"content", request.prompt}}});

  httplib::Client client(base_url_);
  if (!client.is_valid()) throw EndpointError("unsupported endpoint url '" + base_url_ + "'");
  client.set_connection_timeout(adapter_.timeout_seconds);
  client.set_read_timeout(adapter_.timeout_seconds);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace(adapter_.auth_header, adapter_.auth_prefix + api_key_);

  const auto result = client.Post(adapter_.path, headers, body.dump(), "application/json");
  if (!result) throw EndpointError("request failed: " + httplib::to_string(result.error()));
  if (result->status != 200) {
    throw EndpointError("endpoint returned HTTP " + std::to_string(result->status));
  }
  try {
    const json reply = json::parse(result->body);
    return reply.at(json::json_pointer(adapter_.response_pointer)).get<std::string>();
  } catch (const json::exception& e) {
    throw EndpointError(std::string("unexpected response body: ") + e.what());
  }
}

// ---------------------------------------------------------------- cache

ordered_json to_json(const ElicitationRecord& r) {
  ordered_json doc;
  doc["model"] = r.model_name;
  doc["headline_id"] = r.headline_id;
  doc["target_str"] = r.target_str;
  doc["raw_response"] = r.raw_response;
  doc["parsed_label"] = r.parsed_label ? ordered_json(*r.parsed_label) : ordered_json(nullptr);
  doc["refusal"] = r.refusal;
  doc["timestamp"] = r.timestamp;
  doc["attempts"] = r.attempts;
  return doc;
}

ElicitationRecord record_from_json(const json& doc) {
  ElicitationRecord r;
  r.model_name = doc.at("model").get<std::string>();
  r.headline_id = doc.at("headline_id").get<std::string>();
  r.target_str = doc.at("target_str").get<std::string>();
  r.raw_response = doc.at("raw_response").get<std::string>();
  if (!doc.at("parsed_label").is_null()) r.parsed_label = doc.at("parsed_label").get<int>();
  r.refusal = doc.at("refusal").get<bool>();
  r.timestamp = doc.value("timestamp", "");
  r.attempts = doc.at("attempts").get<int>();
  if (r.refusal == r.parsed_label.has_value()) {
    throw CacheCorrupt("record must carry a label exactly when it is not a refusal");
  }
  if (r.parsed_label && (*r.parsed_label < 1 || *r.parsed_label > 5)) {
    throw CacheCorrupt("cached label out of range");
  }
  return r;
}

ElicitationCache::ElicitationCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto record = record_from_json(json::parse(line));
      records_[key(record.model_name, record.headline_id, record.target_str)] = std::move(record);
    } catch (const json::exception& e) {
      throw CacheCorrupt("cache line " + std::to_string(number) + ": " + e.what());
    } catch (const CacheCorrupt& e) {
      throw CacheCorrupt("cache line " + std::to_string(number) + ": " + e.what());
    }
  }
}

std::string ElicitationCache::key(std::string_view model, std::string_view headline_id,
                                  std::string_view target_str) {
  std::string k(model);
  k += '\x1f';
  k += headline_id;
  k += '\x1f';
  k += target_str;
  return k;
}

std::optional<ElicitationRecord> ElicitationCache::find(std::string_view model,
                                                        std::string_view headline_id,
                                                        std::string_view target_str) const {
  std::lock_guard lock(mutex_);
  const auto it = records_.find(key(model, headline_id, target_str));
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void ElicitationCache::append(const ElicitationRecord& record) {
  std::lock_guard lock(mutex_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to cache '" + path_.string() + "'");
  out << to_json(record).dump() << '\n';
  out.flush();
  if (!out) throw IoError("failed writing cache '" + path_.string() + "'");
  records_[key(record.model_name, record.headline_id, record.target_str)] = record;
}

std::size_t ElicitationCache::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

// ---------------------------------------------------------------- elicitation

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

class RateLimiter {
 public:
  explicit RateLimiter(double per_second)
      : interval_(per_second > 0.0 ? std::chrono::duration<double>(1.0 / per_second)
                                   : std::chrono::duration<double>(0.0)) {}

  void wait() {
    if (interval_.count() == 0.0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval_);
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::duration<double> interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

struct Job {
  std::size_t variant;
  std::size_t headline;
};

}  // namespace

ElicitationOutcome elicit_all(const ElicitationConfig& config, const Corpus& corpus,
                              std::span<const std::string> target_variants,
                              ChatEndpoint& endpoint) {
  if (config.model_name.empty()) throw ConfigError("elicitation needs a model name");
  if (config.max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (config.temperature != 0.0) throw ConfigError("the protocol fixes temperature at 0");
  if (target_variants.empty()) throw ConfigError("no target_str variant requested");

  ElicitationCache cache(config.cache_path);
  std::vector<std::vector<std::optional<ElicitationRecord>>> records(
      target_variants.size(), std::vector<std::optional<ElicitationRecord>>(corpus.size()));
  std::vector<Job> jobs;
  ElicitationOutcome outcome;
  for (std::size_t v = 0; v < target_variants.size(); ++v) {
    for (std::size_t h = 0; h < corpus.size(); ++h) {
      if (auto hit = cache.find(config.model_name, corpus[h].id, target_variants[v])) {
        records[v][h] = std::move(hit);
        ++outcome.cache_hits;
      } else {
        jobs.push_back({v, h});
      }
    }
  }

  RateLimiter limiter(config.request_rate_limit);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> requests{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto run_job = [&](const Job& job) {
    const std::string& target = target_variants[job.variant];
    const std::string prompt = build_prompt(corpus, job.headline, target, config.seed);
    ElicitationRecord record;
    record.model_name = config.model_name;
    record.headline_id = corpus[job.headline].id;
    record.target_str = target;
    const int max_attempts = 1 + config.max_retries;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      limiter.wait();
      ++requests;
      record.attempts = attempt;
      std::string raw;
      try {
        raw = endpoint.complete(ChatRequest{config.model_name, prompt, config.temperature});
      } catch (const EndpointError& e) {
        if (attempt == max_attempts) {
          throw EndpointError("'" + record.headline_id + "' (" + target + ") failed after " +
                              std::to_string(attempt) + " attempts: " + e.what());
        }
        continue;
      }
      record.raw_response = raw;
      const auto parsed = parse_response(raw);
      record.parsed_label = parsed.label;
      record.refusal = parsed.refusal();
      if (!parsed.refusal()) break;
    }
    record.timestamp = utc_timestamp();
    cache.append(record);
    records[job.variant][job.headline] = std::move(record);
  };

  auto worker = [&] {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= jobs.size()) return;
      try {
        run_job(jobs[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  const auto thread_count = std::min<std::size_t>(
      static_cast<std::size_t>(std::max(1, config.max_in_flight)), jobs.size());
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  outcome.requests = requests;

  for (std::size_t v = 0; v < target_variants.size(); ++v) {
    ResponseMatrixBuilder builder(corpus, LikelihoodScale::likert);
    const std::size_t row = builder.add_responder(config.model_name);
    for (std::size_t h = 0; h < corpus.size(); ++h) {
      const auto& r = records[v][h];
      if (r && r->parsed_label) {
        builder.set(row, h, likert_to_likelihood(*r->parsed_label));
      } else {
        ++outcome.refusals;
      }
    }
    outcome.matrices.push_back(std::move(builder).build());
  }
  return outcome;
}

}  // namespace hybridcrowd
