#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "greater/table.hpp"

namespace greater {

struct CsvDialect {
  char separator = ',';
};

// RFC 4180 records. A blank line is a record with one empty field; a final
// line terminator does not start a new record. A leading UTF-8 BOM is skipped.
std::vector<std::vector<std::string>> parse_csv(std::string_view text, CsvDialect dialect = {});
std::string format_csv_record(const std::vector<std::string>& fields, CsvDialect dialect = {});

/// Loads a CSV whose header names the schema's columns in any order; columns
/// are reordered to schema order. Extra or missing header names are reported
/// together. Data rows are numbered from 1 in error messages.
Table load_csv(const std::filesystem::path& path, const Schema& schema, CsvDialect dialect = {});
Table parse_table(std::string_view text, const Schema& schema, CsvDialect dialect = {});

void write_csv(const Table& table, const std::filesystem::path& path, CsvDialect dialect = {});
std::string format_table(const Table& table, CsvDialect dialect = {});

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace greater
