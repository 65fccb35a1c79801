#include "hybridcrowd/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unordered_set>

#include "hybridcrowd/csv.hpp"
#include "hybridcrowd/error.hpp"
#include "hybridcrowd/format.hpp"

namespace hybridcrowd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(FileFormat f) { return f == FileFormat::csv ? "csv" : "json"; }

std::optional<FileFormat> parse_file_format(std::string_view text) {
  if (text == "csv") return FileFormat::csv;
  if (text == "json") return FileFormat::json;
  return std::nullopt;
}

FileFormat format_from_extension(const fs::path& path) {
  return path.extension() == ".json" ? FileFormat::json : FileFormat::csv;
}

namespace {

constexpr std::array<std::string_view, 7> kCorpusColumns{
    "id", "text", "category", "group", "sentiment", "status", "partner_id"};

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

template <typename T>
T parse_field(std::optional<T> value, std::string_view what, const std::string& text,
              std::size_t line) {
  if (!value) throw ParseError("invalid " + std::string(what) + " '" + text + "'", line);
  return *value;
}

Headline headline_from_fields(const std::vector<std::string>& f, std::size_t line) {
  Headline h;
  h.id = f[0];
  h.text = f[1];
  h.category = parse_field(parse_category(f[2]), "category", f[2], line);
  h.group = parse_field(parse_group(f[3]), "group", f[3], line);
  h.sentiment = parse_field(parse_sentiment(f[4]), "sentiment", f[4], line);
  h.status = parse_field(parse_status(f[5]), "status", f[5], line);
  h.partner_id = f[6];
  if (h.id.empty()) throw ParseError("empty id", line);
  return h;
}

Corpus load_corpus_csv(const fs::path& path) {
  auto in = open_input(path);
  const auto table = csv::Table::read(in);
  std::array<std::size_t, kCorpusColumns.size()> cols{};
  for (std::size_t i = 0; i < kCorpusColumns.size(); ++i) {
    cols[i] = table.require_column(kCorpusColumns[i]);
  }
  std::vector<Headline> headlines;
  headlines.reserve(table.rows().size());
  for (const auto& row : table.rows()) {
    std::vector<std::string> fields(kCorpusColumns.size());
    for (std::size_t i = 0; i < cols.size(); ++i) fields[i] = row.fields[cols[i]];
    headlines.push_back(headline_from_fields(fields, row.line));
  }
  return Corpus::create(std::move(headlines), "csv:" + path.filename().string());
}

Corpus load_corpus_json(const fs::path& path) {
  auto in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  std::string metadata;
  const json* items = &doc;
  if (doc.is_object()) {
    if (doc.contains("metadata") && doc["metadata"].is_string()) metadata = doc["metadata"];
    if (!doc.contains("headlines")) throw ParseError("missing key 'headlines'");
    items = &doc["headlines"];
  }
  if (!items->is_array()) throw ParseError("'headlines' must be an array");
  std::vector<Headline> headlines;
  std::size_t position = 0;
  for (const auto& item : *items) {
    ++position;
    if (!item.is_object()) throw ParseError("headline #" + std::to_string(position) + " is not an object");
    std::vector<std::string> fields;
    for (const auto key : kCorpusColumns) {
      const auto it = item.find(std::string(key));
      if (it == item.end() || !it->is_string()) {
        throw ParseError("headline #" + std::to_string(position) + ": missing string key '" +
                         std::string(key) + "'");
      }
      fields.push_back(it->get<std::string>());
    }
    try {
      headlines.push_back(headline_from_fields(fields, 0));
    } catch (const ParseError& e) {
      throw ParseError("headline #" + std::to_string(position) + ": " + e.what());
    }
  }
  if (metadata.empty()) metadata = "json:" + path.filename().string();
  return Corpus::create(std::move(headlines), std::move(metadata));
}

std::optional<double> parse_double(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<int> parse_int(std::string_view text) {
  int value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

Corpus load_corpus(const fs::path& path, FileFormat format) {
  return format == FileFormat::csv ? load_corpus_csv(path) : load_corpus_json(path);
}

void save_corpus(const Corpus& corpus, const fs::path& path, FileFormat format) {
  auto out = open_output(path);
  if (format == FileFormat::csv) {
    csv::write_row(out, {kCorpusColumns.begin(), kCorpusColumns.end()});
    for (const Headline& h : corpus.headlines()) {
      csv::write_row(out, {h.id, h.text, std::string(to_string(h.category)),
                           std::string(to_string(h.group)), std::string(to_string(h.sentiment)),
                           std::string(to_string(h.status)), h.partner_id});
    }
  } else {
    nlohmann::ordered_json doc;
    doc["metadata"] = corpus.metadata();
    auto& items = doc["headlines"] = nlohmann::ordered_json::array();
    for (const Headline& h : corpus.headlines()) {
      items.push_back({{"id", h.id},
                       {"text", h.text},
                       {"category", to_string(h.category)},
                       {"group", to_string(h.group)},
                       {"sentiment", to_string(h.sentiment)},
                       {"status", to_string(h.status)},
                       {"partner_id", h.partner_id}});
    }
    out << doc.dump(2) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

ResponseMatrix load_responses(const fs::path& path, const Corpus& corpus,
                              std::span<const ResponderProfile> profiles) {
  auto in = open_input(path);
  const auto table = csv::Table::read(in);
  const auto responder_col = table.require_column("responder_id");
  const auto headline_col = table.require_column("headline_id");
  const auto label_col = table.column("label");
  const auto likelihood_col = table.column("likelihood");
  if (!label_col && !likelihood_col) throw ParseError("need a 'label' or 'likelihood' column", 1);

  ResponseMatrixBuilder builder(corpus);
  std::unordered_set<std::string> known;
  for (const auto& p : profiles) {
    builder.add_responder(p.id);
    known.insert(p.id);
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& row : table.rows()) {
    const std::string& responder = row.fields[responder_col];
    const std::string& headline = row.fields[headline_col];
    if (responder.empty()) throw ParseError("empty responder_id", row.line);
    if (!profiles.empty() && !known.count(responder)) {
      throw InvariantError("line " + std::to_string(row.line) + ": unknown responder '" +
                           responder + "'");
    }
    const auto h = corpus.index_of(headline);
    if (!h) {
      throw InvariantError("line " + std::to_string(row.line) + ": unknown headline '" +
                           headline + "'");
    }
    const std::size_t r = builder.add_responder(responder);
    if (!seen.emplace(r, *h).second) {
      throw ParseError("duplicate response for (" + responder + ", " + headline + ")", row.line);
    }
    double likelihood = kMissing;
    if (label_col && !row.fields[*label_col].empty()) {
      const auto label = parse_int(row.fields[*label_col]);
      if (!label) throw ParseError("invalid label '" + row.fields[*label_col] + "'", row.line);
      try {
        likelihood = likert_to_likelihood(*label);
      } catch (const OutOfRange& e) {
        throw ParseError(e.what(), row.line);
      }
    } else if (likelihood_col && !row.fields[*likelihood_col].empty()) {
      const auto value = parse_double(row.fields[*likelihood_col]);
      if (!value) {
        throw ParseError("invalid likelihood '" + row.fields[*likelihood_col] + "'", row.line);
      }
      likelihood = *value;
    }
    try {
      builder.set(r, *h, likelihood);
    } catch (const InvariantError& e) {
      throw InvariantError("line " + std::to_string(row.line) + ": " + e.what());
    }
  }
  return std::move(builder).build();
}

void save_responses(const ResponseMatrix& responses, const Corpus& corpus, const fs::path& path) {
  responses.check_aligned(corpus);
  auto out = open_output(path);
  const bool likert = responses.scale() == LikelihoodScale::likert;
  csv::write_row(out, {"responder_id", "headline_id", likert ? "label" : "likelihood"});
  for (std::size_t r = 0; r < responses.responder_count(); ++r) {
    for (std::size_t h = 0; h < corpus.size(); ++h) {
      const double p = responses.at(r, h);
      if (is_missing(p)) continue;
      const std::string value = likert ? std::to_string(*likelihood_to_likert(p)) : format_real(p);
      csv::write_row(out, {responses.responder_ids()[r], corpus[h].id, value});
    }
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<ResponderProfile> load_profiles(const fs::path& path) {
  auto in = open_input(path);
  const auto table = csv::Table::read(in);
  const auto id_col = table.require_column("responder_id");
  const auto kind_col = table.require_column("kind");
  const auto score_col = table.column("benchmark_score");
  std::vector<ResponderProfile> profiles;
  std::unordered_set<std::string> ids;
  for (const auto& row : table.rows()) {
    ResponderProfile p;
    p.id = row.fields[id_col];
    if (p.id.empty()) throw ParseError("empty responder_id", row.line);
    if (!ids.insert(p.id).second) throw ParseError("duplicate responder '" + p.id + "'", row.line);
    const auto kind = parse_responder_kind(row.fields[kind_col]);
    if (!kind) throw ParseError("invalid kind '" + row.fields[kind_col] + "'", row.line);
    p.kind = *kind;
    if (score_col && !row.fields[*score_col].empty()) {
      const auto score = parse_double(row.fields[*score_col]);
      if (!score || *score < 0.0 || *score > 100.0) {
        throw ParseError("invalid benchmark_score '" + row.fields[*score_col] + "'", row.line);
      }
      p.benchmark_score = *score;
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

void save_profiles(std::span<const ResponderProfile> profiles, const fs::path& path) {
  auto out = open_output(path);
  csv::write_row(out, {"responder_id", "kind", "benchmark_score"});
  for (const auto& p : profiles) {
    csv::write_row(out, {p.id, std::string(to_string(p.kind)),
                         p.benchmark_score ? format_real(*p.benchmark_score) : std::string()});
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace hybridcrowd
