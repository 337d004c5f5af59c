#include "reckit/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "reckit/error.hpp"

namespace reckit {

RatingFormat parse_rating_format(std::string_view name) {
  if (name == "csv" || name == "csv-header") return RatingFormat::kCsvHeader;
  if (name == "ml100k" || name == "ml100k-tsv") return RatingFormat::kMl100kTsv;
  throw ParameterError("unknown rating format '" + std::string(name) + "'");
}

std::ptrdiff_t CsvDocument::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return static_cast<std::ptrdiff_t>(c);
  return -1;
}

namespace {

// Reads one record. Returns false at end of input. `line` is advanced past
// every newline consumed, including those inside quoted fields.
bool read_record(std::istream& in, char sep, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  const std::size_t start_line = line;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  int ch;
  while ((ch = in.get()) != std::char_traits<char>::eof()) {
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || field_was_quoted) throw ParseError("stray quote in unquoted field", line);
      quoted = true;
      field_was_quoted = true;
    } else if (c == sep) {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\r' && in.peek() == '\n') {
      continue;
    } else {
      if (field_was_quoted) throw ParseError("text after closing quote", line);
      field.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", start_line);
  ++line;
  fields.push_back(std::move(field));
  return true;
}

bool blank(const std::vector<std::string>& fields) { return fields.size() == 1 && fields[0].empty(); }

}  // namespace

CsvDocument read_csv(std::istream& in, char sep, bool has_header) {
  CsvDocument doc;
  std::vector<std::string> fields;
  std::size_t line = 1;
  if (has_header) {
    while (true) {
      if (!read_record(in, sep, fields, line)) return doc;
      if (!blank(fields)) break;
    }
    doc.header = fields;
  }
  std::size_t rec_line = line;
  while (read_record(in, sep, fields, line)) {
    if (!blank(fields)) {
      if (has_header && fields.size() != doc.header.size())
        throw ParseError("expected " + std::to_string(doc.header.size()) + " fields, found " +
                             std::to_string(fields.size()),
                         rec_line);
      doc.rows.push_back(fields);
      doc.row_lines.push_back(rec_line);
    }
    rec_line = line;
  }
  return doc;
}

CsvDocument read_csv_file(const std::filesystem::path& path, char sep, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in, sep, has_header);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.put(',');
    out << csv_escape(fields[i]);
  }
  out.put('\n');
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::size_t line) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError("invalid number '" + std::string(text) + "'", line);
  return v;
}

std::int64_t parse_int(std::string_view text, std::size_t line) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  std::int64_t v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ParseError("invalid integer '" + std::string(text) + "'", line);
  return v;
}

RatingTable table_from_csv(const CsvDocument& doc) {
  const auto uc = doc.column("user");
  const auto ic = doc.column("item");
  if (uc < 0 || ic < 0) throw SchemaError("rating data requires 'user' and 'item' columns");
  const auto rc = doc.column("rating");
  const auto tc = doc.column("timestamp");

  const std::size_t n = doc.rows.size();
  std::vector<std::string> users, items;
  users.reserve(n);
  items.reserve(n);
  std::optional<std::vector<double>> ratings;
  std::optional<std::vector<std::int64_t>> stamps;
  if (rc >= 0) ratings.emplace().reserve(n);
  if (tc >= 0) stamps.emplace().reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = doc.rows[r];
    users.push_back(row[uc]);
    items.push_back(row[ic]);
    if (rc >= 0) ratings->push_back(parse_double(row[rc], doc.row_lines[r]));
    if (tc >= 0) stamps->push_back(parse_int(row[tc], doc.row_lines[r]));
  }
  auto table = RatingTable::from_columns(std::move(users), std::move(items), std::move(ratings),
                                         std::move(stamps));
  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    const auto sc = static_cast<std::ptrdiff_t>(c);
    if (sc == uc || sc == ic || sc == rc || sc == tc) continue;
    std::vector<std::string> vals;
    vals.reserve(n);
    for (const auto& row : doc.rows) vals.push_back(row[c]);
    table.add_extra(doc.header[c], std::move(vals));
  }
  return table;
}

RatingTable read_ratings_csv(std::istream& in) { return table_from_csv(read_csv(in, ',', true)); }

RatingTable read_ml100k(std::istream& in) {
  std::vector<std::string> users, items;
  std::vector<double> ratings;
  std::vector<std::int64_t> stamps;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view parts[4];
    std::size_t count = 0;
    while (count < 4) {
      const auto tab = rest.find('\t');
      parts[count++] = rest.substr(0, tab);
      if (tab == std::string_view::npos) {
        rest = {};
        break;
      }
      rest.remove_prefix(tab + 1);
    }
    if (count != 4 || !rest.empty())
      throw ParseError("expected 4 tab-separated fields", lineno);
    users.emplace_back(parts[0]);
    items.emplace_back(parts[1]);
    ratings.push_back(parse_double(parts[2], lineno));
    stamps.push_back(parse_int(parts[3], lineno));
  }
  return RatingTable::from_columns(std::move(users), std::move(items), std::move(ratings),
                                   std::move(stamps));
}

RatingTable load_ratings(const std::filesystem::path& path, RatingFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return format == RatingFormat::kMl100kTsv ? read_ml100k(in) : read_ratings_csv(in);
}

void write_ratings_csv(std::ostream& out, const RatingTable& table) {
  write_csv_row(out, table.column_names());
  std::vector<std::string> row;
  for (std::size_t r = 0; r < table.size(); ++r) {
    row.clear();
    row.push_back(table.users()[r]);
    row.push_back(table.items()[r]);
    if (table.has_ratings()) row.push_back(format_double(table.ratings()[r]));
    if (table.has_timestamps()) row.push_back(std::to_string(table.timestamps()[r]));
    for (const auto& e : table.extras()) row.push_back(e.values[r]);
    write_csv_row(out, row);
  }
}

void write_ratings_csv(const std::filesystem::path& path, const RatingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_ratings_csv(out, table);
}

}  // namespace reckit
