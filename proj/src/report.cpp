#include "hybridcrowd/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hybridcrowd/csv.hpp"
#include "hybridcrowd/error.hpp"
#include "hybridcrowd/format.hpp"

namespace hybridcrowd {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double r6(double v) { return round_to(v, 6); }

std::string cell_text(double v) { return is_missing(v) ? std::string() : format_fixed(v, 6); }

ordered_json real_json(double v) { return is_missing(v) ? ordered_json(nullptr) : ordered_json(r6(v)); }

double real_from_json(const json& v) { return v.is_null() ? kMissing : v.get<double>(); }

double parse_real(const std::string& text, std::size_t line) {
  if (text.empty() || text == "nan") return kMissing;
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ParseError("malformed number '" + text + "'", line);
  }
  return v;
}

std::size_t parse_count(const std::string& text, std::size_t line) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ParseError("malformed count '" + text + "'", line);
  }
  return v;
}

std::string category_text(const BiasCell& c) {
  return c.category ? std::string(to_string(*c.category)) : "all";
}
std::string status_text(const BiasCell& c) {
  return c.status ? std::string(to_string(*c.status)) : "all";
}
std::string band_text(const BiasCell& c) { return c.band ? std::string(to_string(*c.band)) : ""; }

void parse_cell_keys(BiasCell& cell, const std::string& category, const std::string& status,
                     const std::string& band, std::size_t line) {
  if (category != "all") {
    cell.category = parse_category(category);
    if (!cell.category) throw ParseError("unknown category '" + category + "'", line);
  }
  if (status != "all") {
    cell.status = parse_status(status);
    if (!cell.status) throw ParseError("unknown status '" + status + "'", line);
  }
  if (!band.empty()) {
    cell.band = parse_significance_band(band);
    if (!cell.band) throw ParseError("unknown significance band '" + band + "'", line);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

const std::vector<std::string> kBiasHeader{"label",  "group_type", "aggregator", "repeats",
                                           "category", "status",   "accuracy",   "delta",
                                           "p_value", "band"};
const std::vector<std::string> kSweepHeader{"group_type", "size",   "aggregator", "repeats",
                                            "mean",       "ci_low", "ci_high"};
const std::vector<std::string> kVariantHeader{"responder", "target_str", "accuracy", "answered"};

}  // namespace

ExperimentReport rounded(const ExperimentReport& report) {
  ExperimentReport out = report;
  for (auto& row : out.bias_rows) {
    for (auto& c : row.cells) {
      c.accuracy = r6(c.accuracy);
      c.delta = r6(c.delta);
      c.p_value = r6(c.p_value);
    }
  }
  for (auto& s : out.sweep) {
    s.mean = r6(s.mean);
    s.ci_low = r6(s.ci_low);
    s.ci_high = r6(s.ci_high);
  }
  for (auto& v : out.prompt_variants) v.accuracy = r6(v.accuracy);
  return out;
}

namespace {

bool same_real(double a, double b) { return (is_missing(a) && is_missing(b)) || a == b; }

}  // namespace

bool same_content(const ExperimentReport& a, const ExperimentReport& b) {
  if (a.bias_rows.size() != b.bias_rows.size() || a.sweep.size() != b.sweep.size() ||
      a.prompt_variants.size() != b.prompt_variants.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.bias_rows.size(); ++i) {
    const auto& x = a.bias_rows[i];
    const auto& y = b.bias_rows[i];
    if (x.label != y.label || x.group_type != y.group_type || x.aggregator != y.aggregator ||
        x.repeats != y.repeats || x.cells.size() != y.cells.size()) {
      return false;
    }
    for (std::size_t j = 0; j < x.cells.size(); ++j) {
      const auto& c = x.cells[j];
      const auto& d = y.cells[j];
      if (c.category != d.category || c.status != d.status || c.band != d.band ||
          !same_real(c.accuracy, d.accuracy) || !same_real(c.delta, d.delta) ||
          !same_real(c.p_value, d.p_value)) {
        return false;
      }
    }
  }
  for (std::size_t i = 0; i < a.sweep.size(); ++i) {
    const auto& x = a.sweep[i];
    const auto& y = b.sweep[i];
    if (x.group_type != y.group_type || x.size != y.size || x.aggregator != y.aggregator ||
        x.repeats != y.repeats || !same_real(x.mean, y.mean) || !same_real(x.ci_low, y.ci_low) ||
        !same_real(x.ci_high, y.ci_high)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.prompt_variants.size(); ++i) {
    const auto& x = a.prompt_variants[i];
    const auto& y = b.prompt_variants[i];
    if (x.responder != y.responder || x.target_str != y.target_str || x.answered != y.answered ||
        !same_real(x.accuracy, y.accuracy)) {
      return false;
    }
  }
  return a.manifest == b.manifest;
}

ordered_json report_to_json(const ExperimentReport& report) {
  ordered_json doc;
  auto& rows = doc["bias_rows"] = ordered_json::array();
  for (const auto& row : report.bias_rows) {
    ordered_json r;
    r["label"] = row.label;
    r["group_type"] = row.group_type;
    r["aggregator"] = row.aggregator;
    r["repeats"] = row.repeats;
    auto& cells = r["cells"] = ordered_json::array();
    for (const auto& c : row.cells) {
      ordered_json cell;
      cell["category"] = category_text(c);
      cell["status"] = status_text(c);
      cell["accuracy"] = real_json(c.accuracy);
      cell["delta"] = real_json(c.delta);
      cell["p_value"] = real_json(c.p_value);
      cell["band"] = c.band ? ordered_json(to_string(*c.band)) : ordered_json(nullptr);
      cells.push_back(std::move(cell));
    }
    rows.push_back(std::move(r));
  }
  auto& sweep = doc["sweep"] = ordered_json::array();
  for (const auto& s : report.sweep) {
    ordered_json c;
    c["group_type"] = s.group_type;
    c["size"] = s.size;
    c["aggregator"] = s.aggregator;
    c["repeats"] = s.repeats;
    c["mean"] = real_json(s.mean);
    c["ci_low"] = real_json(s.ci_low);
    c["ci_high"] = real_json(s.ci_high);
    sweep.push_back(std::move(c));
  }
  auto& variants = doc["prompt_variants"] = ordered_json::array();
  for (const auto& v : report.prompt_variants) {
    ordered_json c;
    c["responder"] = v.responder;
    c["target_str"] = v.target_str;
    c["accuracy"] = real_json(v.accuracy);
    c["answered"] = v.answered;
    variants.push_back(std::move(c));
  }
  return doc;
}

void write_json_file(const ordered_json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_csv_file(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  csv::write_row(out, header);
  for (const auto& r : rows) csv::write_row(out, r);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               const std::filesystem::path& dir,
                                               FileFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
  std::vector<std::filesystem::path> written;
  if (format == FileFormat::json) {
    write_json_file(report_to_json(report), dir / "report.json");
    written.push_back(dir / "report.json");
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : report.bias_rows) {
      for (const auto& c : row.cells) {
        rows.push_back({row.label, row.group_type, row.aggregator, std::to_string(row.repeats),
                        category_text(c), status_text(c), cell_text(c.accuracy),
                        cell_text(c.delta), cell_text(c.p_value), band_text(c)});
      }
    }
    write_csv_file(dir / "bias_report.csv", kBiasHeader, rows);
    written.push_back(dir / "bias_report.csv");

    rows.clear();
    for (const auto& s : report.sweep) {
      rows.push_back({s.group_type, std::to_string(s.size), s.aggregator, std::to_string(s.repeats),
                      cell_text(s.mean), cell_text(s.ci_low), cell_text(s.ci_high)});
    }
    write_csv_file(dir / "sweep.csv", kSweepHeader, rows);
    written.push_back(dir / "sweep.csv");

    if (!report.prompt_variants.empty()) {
      rows.clear();
      for (const auto& v : report.prompt_variants) {
        rows.push_back({v.responder, v.target_str, cell_text(v.accuracy), std::to_string(v.answered)});
      }
      write_csv_file(dir / "prompt_variants.csv", kVariantHeader, rows);
      written.push_back(dir / "prompt_variants.csv");
    }
  }
  write_json_file(report.manifest, dir / "manifest.json");
  written.push_back(dir / "manifest.json");
  return written;
}

namespace {

void load_manifest(ExperimentReport& report, const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  if (!std::filesystem::exists(path)) return;
  auto in = open_input(path);
  try {
    report.manifest = ordered_json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed manifest: " + std::string(e.what()));
  }
}

ExperimentReport load_json_report(const std::filesystem::path& dir) {
  ExperimentReport report;
  auto in = open_input(dir / "report.json");
  try {
    const json doc = json::parse(in);
    for (const auto& r : doc.at("bias_rows")) {
      BiasRow row;
      row.label = r.at("label").get<std::string>();
      row.group_type = r.at("group_type").get<std::string>();
      row.aggregator = r.at("aggregator").get<std::string>();
      row.repeats = r.at("repeats").get<std::size_t>();
      for (const auto& c : r.at("cells")) {
        BiasCell cell;
        parse_cell_keys(cell, c.at("category").get<std::string>(), c.at("status").get<std::string>(),
                        c.at("band").is_null() ? "" : c.at("band").get<std::string>(), 0);
        cell.accuracy = real_from_json(c.at("accuracy"));
        cell.delta = real_from_json(c.at("delta"));
        cell.p_value = real_from_json(c.at("p_value"));
        row.cells.push_back(cell);
      }
      report.bias_rows.push_back(std::move(row));
    }
    for (const auto& c : doc.at("sweep")) {
      SweepCell s;
      s.group_type = c.at("group_type").get<std::string>();
      s.size = c.at("size").get<std::size_t>();
      s.aggregator = c.at("aggregator").get<std::string>();
      s.repeats = c.at("repeats").get<std::size_t>();
      s.mean = real_from_json(c.at("mean"));
      s.ci_low = real_from_json(c.at("ci_low"));
      s.ci_high = real_from_json(c.at("ci_high"));
      report.sweep.push_back(std::move(s));
    }
    for (const auto& c : doc.at("prompt_variants")) {
      PromptVariantRow v;
      v.responder = c.at("responder").get<std::string>();
      v.target_str = c.at("target_str").get<std::string>();
      v.accuracy = real_from_json(c.at("accuracy"));
      v.answered = c.at("answered").get<std::size_t>();
      report.prompt_variants.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw ParseError("malformed report.json: " + std::string(e.what()));
  }
  return report;
}

csv::Table read_table(const std::filesystem::path& path, const std::vector<std::string>& header) {
  auto in = open_input(path);
  auto table = csv::Table::read(in);
  if (table.header() != header) throw ParseError("unexpected header in '" + path.string() + "'", 1);
  return table;
}

ExperimentReport load_csv_report(const std::filesystem::path& dir) {
  ExperimentReport report;
  const auto bias = read_table(dir / "bias_report.csv", kBiasHeader);
  for (const auto& rec : bias.rows()) {
    const auto& f = rec.fields;
    const std::size_t repeats = parse_count(f[3], rec.line);
    if (report.bias_rows.empty() || report.bias_rows.back().label != f[0] ||
        report.bias_rows.back().group_type != f[1] || report.bias_rows.back().aggregator != f[2]) {
      report.bias_rows.push_back(BiasRow{f[0], f[1], f[2], repeats, {}});
    }
    BiasCell cell;
    parse_cell_keys(cell, f[4], f[5], f[9], rec.line);
    cell.accuracy = parse_real(f[6], rec.line);
    cell.delta = parse_real(f[7], rec.line);
    cell.p_value = parse_real(f[8], rec.line);
    report.bias_rows.back().cells.push_back(cell);
  }
  const auto sweep = read_table(dir / "sweep.csv", kSweepHeader);
  for (const auto& rec : sweep.rows()) {
    const auto& f = rec.fields;
    report.sweep.push_back(SweepCell{f[0], parse_count(f[1], rec.line), f[2],
                                     parse_count(f[3], rec.line), parse_real(f[4], rec.line),
                                     parse_real(f[5], rec.line), parse_real(f[6], rec.line)});
  }
  if (std::filesystem::exists(dir / "prompt_variants.csv")) {
    const auto variants = read_table(dir / "prompt_variants.csv", kVariantHeader);
    for (const auto& rec : variants.rows()) {
      const auto& f = rec.fields;
      report.prompt_variants.push_back(
          PromptVariantRow{f[0], f[1], parse_real(f[2], rec.line), parse_count(f[3], rec.line)});
    }
  }
  return report;
}

}  // namespace

ExperimentReport load_report(const std::filesystem::path& dir, FileFormat format) {
  ExperimentReport report = format == FileFormat::json ? load_json_report(dir) : load_csv_report(dir);
  load_manifest(report, dir);
  return report;
}

}  // namespace hybridcrowd
