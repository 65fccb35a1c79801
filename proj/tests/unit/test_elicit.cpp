#include <doctest.h>

#include <cstdlib>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hybridcrowd/crowdsim.hpp"
#include "hybridcrowd/dataset_io.hpp"
#include "hybridcrowd/elicit.hpp"
#include "hybridcrowd/error.hpp"
#include "support.hpp"

using namespace hybridcrowd;

namespace {

Corpus fixture_corpus() {
  return load_corpus(support::data_path("fixtures/prompt_corpus.csv"), FileFormat::csv);
}

// Replies with a script per prompt: the n-th request for a prompt gets
// script[min(n, size - 1)].
class ScriptedEndpoint : public ChatEndpoint {
 public:
  explicit ScriptedEndpoint(std::vector<std::string> script) : script_(std::move(script)) {}

  std::string complete(const ChatRequest& request) override {
    std::lock_guard lock(mutex_);
    ++calls_;
    const std::size_t n = seen_[request.prompt]++;
    last_temperature_ = request.temperature;
    return script_[std::min(n, script_.size() - 1)];
  }

  std::size_t calls() const { return calls_; }
  double last_temperature() const { return last_temperature_; }

 private:
  std::vector<std::string> script_;
  std::map<std::string, std::size_t> seen_;
  std::size_t calls_ = 0;
  double last_temperature_ = -1.0;
  std::mutex mutex_;
};

class FailingEndpoint : public ChatEndpoint {
 public:
  std::string complete(const ChatRequest&) override {
    ++calls;
    throw EndpointError("connection refused");
  }
  std::atomic<int> calls{0};
};

ElicitationConfig config_for(const support::TempDir& dir) {
  ElicitationConfig c;
  c.endpoint_url = "mock://";
  c.model_name = "mock-model";
  c.cache_path = dir / "cache.jsonl";
  c.seed = 17;
  return c;
}

const std::vector<std::string> kTrueOnly{"true"};

}  // namespace

TEST_CASE("golden prompts") {
  const Corpus corpus = fixture_corpus();
  const auto cases = nlohmann::json::parse(support::read_text(support::data_path("fixtures/prompt_cases.json")));
  REQUIRE(cases.size() == 3);
  for (const auto& c : cases) {
    const std::string target = c.at("target_str");
    std::vector<Headline> examples;
    std::vector<int> labels;
    for (const auto& id : c.at("examples")) {
      examples.push_back(corpus.at(id.get<std::string>()));
      labels.push_back(expected_label(examples.back().status, target));
    }
    const auto text = render_prompt(PromptTemplate{target}, corpus.at(c.at("query").get<std::string>()),
                                    examples, labels);
    const auto golden = support::read_text(support::data_path("golden/" + c.at("golden").get<std::string>()));
    CHECK(text == golden);
  }
}

TEST_CASE("prompt scaffold details") {
  const Corpus corpus = fixture_corpus();
  const auto prompt = build_prompt(corpus, corpus.require_index("g-pm"), "true", 1);
  CHECK(prompt.starts_with("How likely is it that this headline is true.\n\n Choose one"));
  CHECK(prompt.find("1. very unlikely, 2. unlikely, 3. undecided, 4. likely, 5. very likely.\n") !=
        std::string::npos);
  CHECK(prompt.ends_with("\"Men lead record number of community volunteer drives\"\nResponse: "));
  const auto fake = build_prompt(corpus, corpus.require_index("g-pm"), "fake", 1);
  CHECK(fake.starts_with("How likely is it that this headline is fake.\n"));
  CHECK(build_prompt(corpus, 3, "true", 5) == build_prompt(corpus, 3, "true", 5));
}

TEST_CASE("render errors") {
  const Corpus corpus = fixture_corpus();
  std::vector<Headline> three{corpus[0], corpus[1], corpus[2]};
  std::vector<int> labels{1, 5, 1};
  CHECK_THROWS_AS(render_prompt(PromptTemplate{}, corpus[3], three, labels), BadArity);
  std::vector<Headline> four{corpus[0], corpus[1], corpus[2], corpus[4]};
  std::vector<int> bad{1, 5, 1, 9};
  CHECK_THROWS_AS(render_prompt(PromptTemplate{}, corpus[3], four, bad), OutOfRange);
}

TEST_CASE("expected labels") {
  CHECK(expected_label(Status::genuine, "true") == 5);
  CHECK(expected_label(Status::altered, "real") == 1);
  CHECK(expected_label(Status::genuine, "fake") == 1);
  CHECK(expected_label(Status::altered, "altered") == 5);
  CHECK(is_negated_target("false"));
  CHECK_FALSE(is_negated_target("genuine"));
}

TEST_CASE("example selection never leaks the partner") {
  const Corpus corpus = generate_corpus(2, 4);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (std::size_t q = 0; q < corpus.size(); ++q) {
      const auto picks = select_examples(corpus, q, seed);
      std::set<std::pair<Status, Sentiment>> cells;
      for (const auto i : picks) {
        CHECK(i != q);
        CHECK(i != corpus.partner_index(q));
        CHECK(corpus[i].category == corpus[q].category);
        cells.insert({corpus[i].status, corpus[i].sentiment});
      }
      CHECK(cells.size() == 4);
      const auto prompt = build_prompt(corpus, q, "true", seed);
      CHECK(prompt.find(corpus[corpus.partner_index(q)].text) == std::string::npos);
    }
  }
}

TEST_CASE("too few examples") {
  const Corpus corpus = fixture_corpus();
  // Drop one gender pair so that a cell empties once the query pair is excluded.
  std::vector<Headline> kept;
  for (const auto& h : corpus.headlines()) {
    if (h.id != "g-pw" && h.id != "a-pw") kept.push_back(h);
  }
  const Corpus smaller = Corpus::create(kept);
  CHECK_THROWS_AS(select_examples(smaller, smaller.require_index("g-pm"), 0), InsufficientExamples);
}

TEST_CASE("parser fixture set") {
  const auto cases = nlohmann::json::parse(support::read_text(support::data_path("fixtures/parser_cases.json")));
  REQUIRE(cases.size() == 30);
  for (const auto& c : cases) {
    const auto parsed = parse_response(c.at("raw").get<std::string>());
    INFO("raw: " << c.at("raw").get<std::string>());
    if (c.at("expected").is_null()) {
      CHECK(parsed.refusal());
    } else {
      CHECK(parsed.label == c.at("expected").get<int>());
    }
  }
}

TEST_CASE("elicitation with a mock endpoint") {
  support::TempDir dir;
  const Corpus corpus = fixture_corpus();
  auto config = config_for(dir);

  SUBCASE("always five") {
    ScriptedEndpoint endpoint({"5"});
    const auto out = elicit_all(config, corpus, kTrueOnly, endpoint);
    REQUIRE(out.matrices.size() == 1);
    for (const double p : out.matrices[0].row("mock-model")) CHECK(p == 1.0);
    CHECK(out.requests == corpus.size());
    CHECK(endpoint.last_temperature() == 0.0);
  }
  SUBCASE("refusals are retried") {
    ScriptedEndpoint endpoint({"As an AI model, I cannot judge headlines.",
                               "As an AI model, I cannot judge headlines.", "2"});
    config.max_retries = 3;
    const auto out = elicit_all(config, corpus, kTrueOnly, endpoint);
    for (const double p : out.matrices[0].row("mock-model")) CHECK(p == 0.25);
    ElicitationCache cache(config.cache_path);
    const auto record = cache.find("mock-model", "g-pm", "true");
    REQUIRE(record.has_value());
    CHECK(record->attempts == 3);
    CHECK(record->parsed_label == 2);
    CHECK(endpoint.calls() == 3 * corpus.size());
  }
  SUBCASE("persistent refusal becomes missing") {
    ScriptedEndpoint endpoint({"I'm sorry, I can't help with that."});
    config.max_retries = 1;
    const auto out = elicit_all(config, corpus, kTrueOnly, endpoint);
    CHECK(out.refusals == corpus.size());
    CHECK(out.matrices[0].present_count() == 0);
    CHECK(endpoint.calls() == 2 * corpus.size());
  }
  SUBCASE("second run is served from the cache") {
    ScriptedEndpoint first({"4"});
    const std::vector<std::string> variants{"true", "fake"};
    elicit_all(config, corpus, variants, first);
    ScriptedEndpoint second({"1"});
    const auto out = elicit_all(config, corpus, variants, second);
    CHECK(second.calls() == 0);
    CHECK(out.requests == 0);
    CHECK(out.cache_hits == 2 * corpus.size());
    CHECK(out.matrices[1].at(0, 0) == 0.75);
    ElicitationCache cache(config.cache_path);
    CHECK(cache.size() == 2 * corpus.size());
  }
  SUBCASE("transport failures exhaust retries") {
    FailingEndpoint endpoint;
    config.max_retries = 2;
    config.max_in_flight = 1;
    CHECK_THROWS_AS(elicit_all(config, corpus, kTrueOnly, endpoint), EndpointError);
    CHECK(endpoint.calls == 3);
  }
  SUBCASE("configuration errors") {
    ScriptedEndpoint endpoint({"3"});
    config.temperature = 0.7;
    CHECK_THROWS_AS(elicit_all(config, corpus, kTrueOnly, endpoint), ConfigError);
    config.temperature = 0.0;
    CHECK_THROWS_AS(elicit_all(config, corpus, std::vector<std::string>{}, endpoint), ConfigError);
    config.model_name.clear();
    CHECK_THROWS_AS(elicit_all(config, corpus, kTrueOnly, endpoint), ConfigError);
  }
}

TEST_CASE("cache file handling") {
  support::TempDir dir;
  const auto path = dir / "c.jsonl";
  ElicitationRecord r{"m", "h1", "true", "3", 3, false, "2024-01-01T00:00:00Z", 1};
  {
    ElicitationCache cache(path);
    cache.append(r);
    r.raw_response = "4";
    r.parsed_label = 4;
    cache.append(r);
  }
  ElicitationCache reloaded(path);
  CHECK(reloaded.size() == 1);
  CHECK(reloaded.find("m", "h1", "true")->parsed_label == 4);
  CHECK_FALSE(reloaded.find("m", "h1", "fake").has_value());
  CHECK(record_from_json(nlohmann::json::parse(to_json(r).dump())) == r);

  support::write_text(dir / "bad.jsonl", "{\"model\": \"m\"\n");
  CHECK_THROWS_AS(ElicitationCache(dir / "bad.jsonl"), CacheCorrupt);
  support::write_text(dir / "inconsistent.jsonl",
                      "{\"model\":\"m\",\"headline_id\":\"h\",\"target_str\":\"true\",\"raw_response\":\"x\","
                      "\"parsed_label\":null,\"refusal\":false,\"attempts\":1}\n");
  CHECK_THROWS_AS(ElicitationCache(dir / "inconsistent.jsonl"), CacheCorrupt);
}

TEST_CASE("HTTP endpoint against a local server") {
  httplib::Server server;
  nlohmann::json received;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    received = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"4"}}]})",
                    "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  ::setenv("HYBRIDCROWD_TEST_KEY", "secret", 1);
  EndpointAdapter adapter;
  adapter.api_key_env = "HYBRIDCROWD_TEST_KEY";
  adapter.extra_body = {{"max_tokens", 4}};
  HttpChatEndpoint endpoint(base, adapter);
  CHECK(endpoint.complete(ChatRequest{"tiny", "hello", 0.0}) == "4");
  CHECK(received.at("model") == "tiny");
  CHECK(received.at("temperature") == 0.0);
  CHECK(received.at("max_tokens") == 4);
  CHECK(received.at("messages").at(0).at("content") == "hello");
  CHECK(auth == "Bearer secret");

  EndpointAdapter broken;
  broken.path = "/broken";
  HttpChatEndpoint failing(base, broken);
  CHECK_THROWS_AS(failing.complete(ChatRequest{"tiny", "x", 0.0}), EndpointError);

  server.stop();
  thread.join();

  EndpointAdapter needs_key;
  needs_key.api_key_env = "HYBRIDCROWD_TEST_UNSET_KEY";
  ::unsetenv("HYBRIDCROWD_TEST_UNSET_KEY");
  CHECK_THROWS_AS(HttpChatEndpoint(base, needs_key), ConfigError);
}

TEST_CASE("adapter files") {
  support::TempDir dir;
  support::write_text(dir / "a.json", R"({"path": "/chat", "response_pointer": "/output/text", "timeout_seconds": 5})");
  const auto a = load_adapter(dir / "a.json");
  CHECK(a.path == "/chat");
  CHECK(a.response_pointer == "/output/text");
  CHECK(a.timeout_seconds == 5);
  support::write_text(dir / "b.json", R"({"extra_body": [1, 2]})");
  CHECK_THROWS_AS(load_adapter(dir / "b.json"), ConfigError);
  support::write_text(dir / "c.json", "{");
  CHECK_THROWS_AS(load_adapter(dir / "c.json"), ConfigError);
}
