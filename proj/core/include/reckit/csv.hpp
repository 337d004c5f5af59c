#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "reckit/table.hpp"

namespace reckit {

enum class RatingFormat { kCsvHeader, kMl100kTsv };

RatingFormat parse_rating_format(std::string_view name);

// A parsed CSV document: header plus string cells. Quoting follows
// RFC 4180 (double quotes, doubled to escape, embedded separators and
// newlines allowed inside quotes).
struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  // 1-based source line of each row

  // Index of a header column, or -1.
  std::ptrdiff_t column(std::string_view name) const;
};

CsvDocument read_csv(std::istream& in, char sep = ',', bool has_header = true);
CsvDocument read_csv_file(const std::filesystem::path& path, char sep = ',', bool has_header = true);

// Formats one field, quoting only when required.
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest text that parses back to exactly the same double.
std::string format_double(double x);

double parse_double(std::string_view text, std::size_t line);
std::int64_t parse_int(std::string_view text, std::size_t line);

// Interprets a CSV document as a rating table. "user" and "item" are
// required; "rating" and "timestamp" are parsed when present; any other
// column is carried through as text.
RatingTable table_from_csv(const CsvDocument& doc);

RatingTable load_ratings(const std::filesystem::path& path, RatingFormat format);
RatingTable read_ratings_csv(std::istream& in);
RatingTable read_ml100k(std::istream& in);

void write_ratings_csv(std::ostream& out, const RatingTable& table);
void write_ratings_csv(const std::filesystem::path& path, const RatingTable& table);

}  // namespace reckit
