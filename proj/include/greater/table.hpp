#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace greater {

enum class Modality { categorical, numerical, freeform };
enum class Role { subject_id, payload };

std::string_view to_string(Modality m) noexcept;
Modality parse_modality(std::string_view text);

struct ColumnSpec {
  std::string name;
  Modality modality = Modality::categorical;
  Role role = Role::payload;

  bool operator==(const ColumnSpec&) const = default;
};

using Schema = std::vector<ColumnSpec>;
using Row = std::vector<std::string>;

// The empty cell marks a missing value.
inline constexpr std::string_view kMissing{};

// Accepts [+-]digits[.digits][e[+-]digits] (either side of the point may be
// empty but not both) whose value is finite.
bool is_decimal_number(std::string_view text) noexcept;

/// Immutable rectangular table of string cells with a typed schema.
///
/// Construction validates the schema (non-empty unique names, at most one
/// subject_id column), row widths, numerical cells and subject IDs. Numerical
/// cells are validated but kept verbatim so formatting survives round-trips.
class Table {
 public:
  Table() = default;
  Table(Schema schema, std::vector<Row> rows);

  const Schema& schema() const noexcept { return schema_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::size_t num_rows() const noexcept { return rows_.size(); }
  std::size_t num_columns() const noexcept { return schema_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  const Row& row(std::size_t r) const { return rows_.at(r); }
  const std::string& cell(std::size_t r, std::size_t c) const { return rows_.at(r).at(c); }

  std::optional<std::size_t> find_column(std::string_view name) const noexcept;
  // Throws a schema error naming the column when absent.
  std::size_t column_index(std::string_view name) const;
  const ColumnSpec& column(std::string_view name) const { return schema_[column_index(name)]; }
  std::optional<std::size_t> subject_column() const noexcept;
  // Throws when the table has no subject_id column.
  std::size_t require_subject_column() const;

  std::vector<std::string> column_values(std::size_t c) const;
  std::vector<std::string> column_names() const;
  std::vector<std::string> payload_names() const;

  bool operator==(const Table&) const = default;

 private:
  Schema schema_;
  std::vector<Row> rows_;
};

void validate_schema(const Schema& schema);

/// Row indices grouped by subject, subjects in first-appearance order.
class SubjectIndex {
 public:
  const std::vector<std::string>& subjects() const noexcept { return subjects_; }
  std::size_t size() const noexcept { return subjects_.size(); }
  bool contains(const std::string& subject) const { return rows_.contains(subject); }
  // Empty span for unknown subjects.
  std::span<const std::size_t> rows_of(const std::string& subject) const;

 private:
  friend SubjectIndex build_subject_index(const Table& table);
  std::vector<std::string> subjects_;
  std::unordered_map<std::string, std::vector<std::size_t>> rows_;
};

SubjectIndex build_subject_index(const Table& table);

/// Per-subject Cartesian product of the rows of two tables sharing a subject
/// column. Output schema: subject column, a's payloads, b's payloads. Subjects
/// are emitted in a's first-appearance order; a subject missing from either
/// side contributes no rows.
Table flatten_join(const Table& a, const Table& b);

/// Appends the parent's payload columns to every child row (left join on the
/// subject key). Child subjects absent from the parent get missing markers.
Table attach_parent(const Table& child, const Table& parent);

// Projection helpers; names must exist. Order follows `names`.
Table select_columns(const Table& table, std::span<const std::string> names);
Table drop_columns(const Table& table, std::span<const std::string> names);
// Rows restricted to the given indices, in the given order.
Table take_rows(const Table& table, std::span<const std::size_t> indices);

// Distinct rows, first occurrence kept, order preserved.
Table distinct_rows(const Table& table);

// Text fingerprint of a schema: "name:modality:role;..."
std::string schema_fingerprint(const Schema& schema);

}  // namespace greater
