#include "hybridcrowd/csv.hpp"

#include <iterator>

#include "hybridcrowd/error.hpp"

namespace hybridcrowd::csv {

std::vector<Record> read(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool record_has_content = false;
  std::size_t line = 1;
  current.line = 1;

  auto finish_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto finish_record = [&] {
    if (record_has_content) {
      finish_field();
      records.push_back(std::move(current));
    }
    current = Record{};
    field.clear();
    field_started = false;
    record_has_content = false;
  };

  std::size_t i = 0;
  // Skip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw ParseError("unexpected quote inside unquoted field", line);
        }
        in_quotes = true;
        field_started = true;
        record_has_content = true;
        break;
      case ',':
        record_has_content = true;
        finish_field();
        break;
      case '\r':
        break;
      case '\n':
        finish_record();
        ++line;
        current.line = line;
        break;
      default:
        if (!record_has_content) current.line = line;
        field.push_back(c);
        field_started = true;
        record_has_content = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", current.line);
  finish_record();
  return records;
}

Table Table::read(std::istream& in) {
  Table table;
  auto records = csv::read(in);
  if (records.empty()) throw ParseError("missing header row", 1);
  table.header_ = std::move(records.front().fields);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].fields.size() != table.header_.size()) {
      throw ParseError("expected " + std::to_string(table.header_.size()) + " fields, found " +
                           std::to_string(records[r].fields.size()),
                       records[r].line);
    }
    table.rows_.push_back(std::move(records[r]));
  }
  return table;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  if (auto c = column(name)) return *c;
  throw ParseError("missing column '" + std::string(name) + "'", 1);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace hybridcrowd::csv
