#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridcrowd/dataset.hpp"
#include "hybridcrowd/dataset_io.hpp"
#include "hybridcrowd/metrics.hpp"

namespace hybridcrowd {

/// One (category x status) cell of a bias-report row, or the row average
/// when `category` is empty. NaN marks a value that could not be computed.
struct BiasCell {
  std::optional<Category> category;
  std::optional<Status> status;
  double accuracy = kMissing;
  double delta = kMissing;
  double p_value = kMissing;
  std::optional<SignificanceBand> band;

  friend bool operator==(const BiasCell&, const BiasCell&) = default;
};

struct BiasRow {
  std::string label;       // "human", "average(LLM)", a responder id, ...
  std::string group_type;  // "LLM", "human", "hybrid", "LLM+", "hybrid+"; empty for single responders
  std::string aggregator;  // display name; "population" or "individual" for non-aggregated rows
  std::size_t repeats = 1;
  std::vector<BiasCell> cells;  // report column order, average last

  friend bool operator==(const BiasRow&, const BiasRow&) = default;
};

struct SweepCell {
  std::string group_type;
  std::size_t size = 0;
  std::string aggregator;
  std::size_t repeats = 0;
  double mean = kMissing;
  double ci_low = kMissing;
  double ci_high = kMissing;

  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

struct PromptVariantRow {
  std::string responder;
  std::string target_str;
  double accuracy = kMissing;
  std::size_t answered = 0;

  friend bool operator==(const PromptVariantRow&, const PromptVariantRow&) = default;
};

struct ExperimentReport {
  std::vector<BiasRow> bias_rows;
  std::vector<SweepCell> sweep;
  std::vector<PromptVariantRow> prompt_variants;
  nlohmann::ordered_json manifest = nlohmann::ordered_json::object();
};

/// Rounds every real to the emitted precision (6 decimals), so that an
/// emitted-then-loaded report compares equal to the rounded original.
ExperimentReport rounded(const ExperimentReport& report);

bool same_content(const ExperimentReport& a, const ExperimentReport& b);

/// Writes bias_report.csv, sweep.csv, prompt_variants.csv (when present) and
/// manifest.json for csv; report.json and manifest.json for json. Creates
/// `dir` if needed; throws IoError when it cannot be written.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               const std::filesystem::path& dir,
                                               FileFormat format);

ExperimentReport load_report(const std::filesystem::path& dir, FileFormat format);

nlohmann::ordered_json report_to_json(const ExperimentReport& report);

/// Writes `doc` pretty-printed with a trailing newline. Throws IoError.
void write_json_file(const nlohmann::ordered_json& doc, const std::filesystem::path& path);

/// Writes a CSV file from a header and rows. Throws IoError.
void write_csv_file(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

}  // namespace hybridcrowd
