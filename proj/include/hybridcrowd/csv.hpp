#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hybridcrowd::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

/// RFC 4180 reader: quoted fields may hold commas, doubled quotes and
/// newlines. CRLF and LF endings are both accepted. Blank lines are skipped.
/// Throws ParseError on an unterminated quote.
std::vector<Record> read(std::istream& in);

/// Header row plus records, with columns looked up by name.
class Table {
 public:
  static Table read(std::istream& in);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<Record>& rows() const { return rows_; }
  std::optional<std::size_t> column(std::string_view name) const;
  /// Like column() but throws ParseError naming the missing column.
  std::size_t require_column(std::string_view name) const;

 private:
  std::vector<std::string> header_;
  std::vector<Record> rows_;
};

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace hybridcrowd::csv
