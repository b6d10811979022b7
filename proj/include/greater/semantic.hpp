#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "greater/table.hpp"

namespace greater {

enum class MappingMode { differentiability, understandability };

std::string_view to_string(MappingMode mode) noexcept;

/// Bijection original label -> enhanced label for one column.
class ColumnMapping {
 public:
  ColumnMapping(std::string column, std::vector<std::pair<std::string, std::string>> entries);

  const std::string& column() const noexcept { return column_; }
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  const std::string* forward(const std::string& original) const;
  const std::string* inverse(const std::string& enhanced) const;

 private:
  std::string column_;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::unordered_map<std::string, std::size_t> by_original_;
  std::unordered_map<std::string, std::size_t> by_enhanced_;
};

/// Per-column bijections whose enhanced labels are unique across all columns.
///
/// The missing marker (empty cell) is never mapped: apply and invert pass it
/// through unchanged, and it may not appear as an original or enhanced label.
class MappingSystem {
 public:
  MappingSystem(MappingMode mode, std::vector<ColumnMapping> columns);

  MappingMode mode() const noexcept { return mode_; }
  const std::vector<ColumnMapping>& columns() const noexcept { return columns_; }
  std::vector<std::string> selected_columns() const;
  // n = sum over columns of distinct original labels.
  std::size_t total_categories() const noexcept;
  const ColumnMapping* find(std::string_view column) const;

  bool operator==(const MappingSystem& other) const;

 private:
  MappingMode mode_;
  std::vector<ColumnMapping> columns_;
};

/// Assigns each (column, label) pair among the selected categorical columns a
/// distinct name from the pool. Labels are visited per column in
/// ordered_support order and paired with a seeded shuffle of the pool, so the
/// result depends only on the observed labels, the selection, pool and seed.
/// The pool must be distinct and share no value with any cell of any table.
MappingSystem build_differentiability_mapping(std::span<const Table> tables, std::span<const std::string> selected,
                                              std::span<const std::string> name_pool, std::uint64_t seed);
MappingSystem build_differentiability_mapping(const Table& table, std::span<const std::string> selected,
                                              std::span<const std::string> name_pool, std::uint64_t seed);

/// Mapping document: optional "key: value" metadata lines, then one section per
/// column introduced by "[column]" followed by "original => enhanced" lines.
/// Lines starting with '#' and blank lines are ignored.
struct MappingDocument {
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;
};

MappingDocument parse_mapping_document(std::string_view text);

/// Validates a hand-authored document against the tables it will be applied
/// to: every named column must exist, every observed category must be covered
/// and enhanced labels must be unique within and across columns.
MappingSystem build_understandability_mapping(const MappingDocument& doc, std::span<const Table> tables);
MappingSystem build_understandability_mapping(const MappingDocument& doc, const Table& table);

// Mapped columns absent from the table are skipped.
Table apply_mapping(const Table& table, const MappingSystem& mapping);
Table invert_mapping(const Table& table, const MappingSystem& mapping);

struct RowRejection {
  std::size_t row = 0;  // 0-based row in the input
  std::string column;
  std::string value;
};

struct InversionResult {
  Table table;
  std::vector<RowRejection> rejected;  // one entry per dropped row
};

// Same as invert_mapping but drops rows holding out-of-range labels.
InversionResult invert_mapping_lenient(const Table& table, const MappingSystem& mapping);

std::string serialize_mapping(const MappingSystem& mapping);
MappingSystem deserialize_mapping(std::string_view text);

/// File-backed mapping persistence with destruction on request.
class MappingStore {
 public:
  enum class DestroyOutcome { destroyed, already_destroyed };

  explicit MappingStore(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const noexcept { return path_; }
  bool exists() const;
  void save(const MappingSystem& mapping) const;
  MappingSystem load() const;
  // Overwrites the file contents with zeros before unlinking it.
  DestroyOutcome destroy() const;

 private:
  std::filesystem::path path_;
};

struct RewriteRule {
  std::vector<std::string> columns;  // empty: every non-subject column
  std::string pattern;
  std::string replacement;
};

/// Literal substring substitution. Rules apply in order; each rule is checked
/// against the cells it touches so reverse_rewrites restores them exactly: the
/// replacement may not already occur in a scoped cell, and the substituted
/// cell must map back to the original.
Table apply_rewrites(const Table& table, std::span<const RewriteRule> rules);
Table reverse_rewrites(const Table& table, std::span<const RewriteRule> rules);

std::string replace_all(std::string_view text, std::string_view from, std::string_view to);

// Distinct "First Last" style names bundled with the library.
std::vector<std::string> default_name_pool();
std::vector<std::string> load_name_pool(const std::filesystem::path& path);
// Removes pool entries that occur as a cell value in any of the tables.
std::vector<std::string> filter_pool(std::span<const std::string> pool, std::span<const Table> tables);

}  // namespace greater
