#include "greater/csv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "greater/error.hpp"

namespace greater {

std::vector<std::vector<std::string>> parse_csv(std::string_view text, CsvDialect dialect) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  if (text.empty()) return records;

  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      if (!field.empty() || field_was_quoted)
        fail(ErrorKind::parse, "CSV line " + std::to_string(line) + ": stray quote inside unquoted field");
      quoted = true;
      field_was_quoted = true;
    } else if (ch == dialect.separator) {
      end_field();
    } else if (ch == '\r' || ch == '\n') {
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      ++line;
    } else {
      if (field_was_quoted)
        fail(ErrorKind::parse, "CSV line " + std::to_string(line) + ": text after closing quote");
      field.push_back(ch);
    }
  }
  if (quoted) fail(ErrorKind::parse, "CSV: unterminated quoted field");
  const char last = text.back();
  if (last != '\n' && last != '\r') end_record();
  return records;
}

std::string format_csv_record(const std::vector<std::string>& fields, CsvDialect dialect) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(dialect.separator);
    const auto& f = fields[i];
    const bool needs_quotes = f.find_first_of(std::string{dialect.separator, '"', '\r', '\n'}) != std::string::npos ||
                              (fields.size() == 1 && f.empty());
    if (!needs_quotes) {
      out += f;
      continue;
    }
    out.push_back('"');
    for (char ch : f) {
      if (ch == '"') out.push_back('"');
      out.push_back(ch);
    }
    out.push_back('"');
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.close();
  if (!out) fail(ErrorKind::io, "failed writing '" + path.string() + "'");
}

Table parse_table(std::string_view text, const Schema& schema, CsvDialect dialect) {
  validate_schema(schema);
  auto records = parse_csv(text, dialect);
  if (records.empty()) fail(ErrorKind::schema, "CSV has no header row");
  const auto& header = records.front();

  std::vector<std::string> missing, unexpected;
  std::vector<std::size_t> source(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    auto it = std::find(header.begin(), header.end(), schema[c].name);
    if (it == header.end())
      missing.push_back(schema[c].name);
    else
      source[c] = static_cast<std::size_t>(it - header.begin());
  }
  for (const auto& name : header) {
    auto it = std::find_if(schema.begin(), schema.end(), [&](const ColumnSpec& s) { return s.name == name; });
    if (it == schema.end()) unexpected.push_back(name);
  }
  if (header.size() != schema.size() && missing.empty() && unexpected.empty())
    fail(ErrorKind::schema, "CSV header repeats a column name");
  if (!missing.empty() || !unexpected.empty()) {
    std::string msg = "CSV header does not match schema;";
    auto list = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& n : v) s += (s.empty() ? "" : ", ") + ("'" + n + "'");
      return s;
    };
    if (!missing.empty()) msg += " missing: " + list(missing) + ";";
    if (!unexpected.empty()) msg += " unexpected: " + list(unexpected) + ";";
    fail(ErrorKind::schema, msg);
  }

  std::vector<Row> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      fail(ErrorKind::parse, "row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                                 " fields, header has " + std::to_string(header.size()));
    }
    Row row(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) row[c] = rec[source[c]];
    rows.push_back(std::move(row));
  }
  return Table(schema, std::move(rows));
}

Table load_csv(const std::filesystem::path& path, const Schema& schema, CsvDialect dialect) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::io, "file not found: '" + path.string() + "'");
  try {
    return parse_table(read_file(path), schema, dialect);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string format_table(const Table& table, CsvDialect dialect) {
  std::string out = format_csv_record(table.column_names(), dialect);
  out.push_back('\n');
  for (const auto& row : table.rows()) {
    out += format_csv_record(row, dialect);
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Table& table, const std::filesystem::path& path, CsvDialect dialect) {
  write_file(path, format_table(table, dialect));
}

}  // namespace greater
