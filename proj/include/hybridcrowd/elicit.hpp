#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hybridcrowd/dataset.hpp"

namespace hybridcrowd {

inline constexpr std::size_t kShotCount = 4;

/// The target_str values of the prompt-framing sweep; the first is the
/// original wording.
inline constexpr std::array<std::string_view, 6> kTargetVariants{"true",  "real",  "genuine",
                                                                 "fake",  "false", "altered"};

struct PromptTemplate {
  std::string target_str = "true";
};

/// True for target words that ask about falsehood ("fake", "false", "altered").
bool is_negated_target(std::string_view target_str);

/// Label a perfectly informed responder gives a headline: 5 for genuine and
/// 1 for altered under a truth-seeking target, reversed under a negated one.
int expected_label(Status status, std::string_view target_str);

/// Four same-category examples, one per status x sentiment cell, never the
/// query or its counterfactual partner; presentation order is shuffled.
/// Deterministic in (seed, query id). Throws InsufficientExamples.
std::array<std::size_t, kShotCount> select_examples(const Corpus& corpus, std::size_t query,
                                                    std::uint64_t seed);

/// Instantiates the 4-shot prompt scaffold. Throws BadArity unless exactly
/// four examples and four labels are given.
std::string render_prompt(const PromptTemplate& tmpl, const Headline& query,
                          std::span<const Headline> examples, std::span<const int> labels);

/// select_examples + expected_label + render_prompt.
std::string build_prompt(const Corpus& corpus, std::size_t query, std::string_view target_str,
                         std::uint64_t seed);

struct ParsedResponse {
  std::optional<int> label;  // empty for a refusal

  bool refusal() const { return !label.has_value(); }
  friend bool operator==(const ParsedResponse&, const ParsedResponse&) = default;
};

/// First standalone digit 1-5 (not inside a word, a longer number or a
/// decimal). Text opening with a known disclaimer, or without such a digit,
/// is a refusal.
ParsedResponse parse_response(std::string_view raw);

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
};

/// A chat-completion backend. complete() returns the raw assistant text and
/// throws EndpointError on transport or protocol failure.
class ChatEndpoint {
 public:
  virtual ~ChatEndpoint() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Describes the wire shape of a chat-completion HTTP service.
struct EndpointAdapter {
  std::string path = "/v1/chat/completions";
  std::string response_pointer = "/choices/0/message/content";
  std::string api_key_env;  // empty: no credentials
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  nlohmann::json extra_body = nlohmann::json::object();
  int timeout_seconds = 60;
};

EndpointAdapter load_adapter(const std::filesystem::path& path);
EndpointAdapter adapter_from_json(const nlohmann::json& doc);

class HttpChatEndpoint : public ChatEndpoint {
 public:
  /// `base_url` is scheme://host[:port]. Throws ConfigError when the
  /// adapter names a credential variable that is not set.
  HttpChatEndpoint(std::string base_url, EndpointAdapter adapter);
  std::string complete(const ChatRequest& request) override;

 private:
  std::string base_url_;
  EndpointAdapter adapter_;
  std::string api_key_;
};

struct ElicitationConfig {
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.0;
  int max_retries = 3;
  std::filesystem::path cache_path;
  int max_in_flight = 4;
  double request_rate_limit = 0.0;  // requests per second; 0 = unlimited
  std::uint64_t seed = 0;           // example selection
};

struct ElicitationRecord {
  std::string model_name;
  std::string headline_id;
  std::string target_str;
  std::string raw_response;
  std::optional<int> parsed_label;
  bool refusal = false;
  std::string timestamp;
  int attempts = 0;

  friend bool operator==(const ElicitationRecord&, const ElicitationRecord&) = default;
};

nlohmann::ordered_json to_json(const ElicitationRecord& record);
ElicitationRecord record_from_json(const nlohmann::json& doc);

/// Append-only line-delimited cache keyed by (model, headline, target_str).
/// Writes are serialized; the last record of a key wins on load.
class ElicitationCache {
 public:
  /// Loads existing records when the file exists; throws CacheCorrupt on a
  /// malformed line.
  explicit ElicitationCache(std::filesystem::path path);

  std::optional<ElicitationRecord> find(std::string_view model, std::string_view headline_id,
                                        std::string_view target_str) const;
  /// Persists and indexes a record. Throws IoError.
  void append(const ElicitationRecord& record);
  std::size_t size() const;

 private:
  static std::string key(std::string_view model, std::string_view headline_id,
                         std::string_view target_str);

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, ElicitationRecord> records_;
};

struct ElicitationOutcome {
  std::vector<ResponseMatrix> matrices;  // one per target variant, responder id = model name
  std::size_t requests = 0;              // endpoint calls issued in this run
  std::size_t cache_hits = 0;
  std::size_t refusals = 0;              // headlines recorded as missing
};

/// Queries every headline under every target variant, re-querying refusals
/// up to max_retries times; cached entries are reused without a request.
/// Throws EndpointError once a request has failed 1 + max_retries times.
ElicitationOutcome elicit_all(const ElicitationConfig& config, const Corpus& corpus,
                              std::span<const std::string> target_variants,
                              ChatEndpoint& endpoint);

}  // namespace hybridcrowd
