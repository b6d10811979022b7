#include "greater/table.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <unordered_set>

#include "greater/error.hpp"

namespace greater {

std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::categorical: return "categorical";
    case Modality::numerical: return "numerical";
    case Modality::freeform: return "freeform";
  }
  return "categorical";
}

Modality parse_modality(std::string_view text) {
  if (text == "categorical") return Modality::categorical;
  if (text == "numerical") return Modality::numerical;
  if (text == "freeform") return Modality::freeform;
  fail(ErrorKind::parse, "unknown modality '" + std::string(text) +
                             "' (expected categorical, numerical or freeform)");
}

bool is_decimal_number(std::string_view s) noexcept {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t int_digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++int_digits;
  std::size_t frac_digits = 0;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return false;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++exp_digits;
    if (exp_digits == 0) return false;
  }
  if (i != s.size()) return false;
  const std::string copy(s);
  return std::isfinite(std::strtod(copy.c_str(), nullptr));
}

void validate_schema(const Schema& schema) {
  std::unordered_set<std::string> seen;
  std::size_t subjects = 0;
  for (const auto& col : schema) {
    if (col.name.empty()) fail(ErrorKind::schema, "column name must be non-empty");
    if (!seen.insert(col.name).second)
      fail(ErrorKind::schema, "duplicate column name '" + col.name + "'");
    if (col.role == Role::subject_id) ++subjects;
  }
  if (subjects > 1) fail(ErrorKind::schema, "schema declares more than one subject_id column");
}

Table::Table(Schema schema, std::vector<Row> rows) : schema_(std::move(schema)), rows_(std::move(rows)) {
  validate_schema(schema_);
  const auto width = schema_.size();
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    if (row.size() != width) {
      fail(ErrorKind::validation, "row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                                      " cells, schema has " + std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const auto& spec = schema_[c];
      if (spec.role == Role::subject_id && row[c].empty()) {
        fail(ErrorKind::validation,
             "row " + std::to_string(r + 1) + ": missing subject ID in column '" + spec.name + "'");
      }
      if (spec.modality == Modality::numerical && !row[c].empty() && !is_decimal_number(row[c])) {
        fail(ErrorKind::parse, "row " + std::to_string(r + 1) + ", column '" + spec.name +
                                   "': '" + row[c] + "' is not a finite decimal number");
      }
    }
  }
}

std::optional<std::size_t> Table::find_column(std::string_view name) const noexcept {
  for (std::size_t c = 0; c < schema_.size(); ++c)
    if (schema_[c].name == name) return c;
  return std::nullopt;
}

std::size_t Table::column_index(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  fail(ErrorKind::schema, "unknown column '" + std::string(name) + "'");
}

std::optional<std::size_t> Table::subject_column() const noexcept {
  for (std::size_t c = 0; c < schema_.size(); ++c)
    if (schema_[c].role == Role::subject_id) return c;
  return std::nullopt;
}

std::size_t Table::require_subject_column() const {
  if (auto c = subject_column()) return *c;
  fail(ErrorKind::schema, "table has no subject_id column");
}

std::vector<std::string> Table::column_values(std::size_t c) const {
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) out.push_back(row.at(c));
  return out;
}

std::vector<std::string> Table::column_names() const {
  std::vector<std::string> out;
  for (const auto& col : schema_) out.push_back(col.name);
  return out;
}

std::vector<std::string> Table::payload_names() const {
  std::vector<std::string> out;
  for (const auto& col : schema_)
    if (col.role == Role::payload) out.push_back(col.name);
  return out;
}

std::span<const std::size_t> SubjectIndex::rows_of(const std::string& subject) const {
  auto it = rows_.find(subject);
  if (it == rows_.end()) return {};
  return it->second;
}

SubjectIndex build_subject_index(const Table& table) {
  const auto sc = table.require_subject_column();
  SubjectIndex index;
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    const auto& subject = table.cell(r, sc);
    auto [it, inserted] = index.rows_.try_emplace(subject);
    if (inserted) index.subjects_.push_back(subject);
    it->second.push_back(r);
  }
  return index;
}

Table flatten_join(const Table& a, const Table& b) {
  const auto sa = a.require_subject_column();
  const auto sb = b.require_subject_column();
  if (a.schema()[sa].name != b.schema()[sb].name) {
    fail(ErrorKind::schema, "subject column mismatch: '" + a.schema()[sa].name + "' vs '" +
                                b.schema()[sb].name + "'");
  }

  Schema schema{a.schema()[sa]};
  std::vector<std::size_t> a_cols, b_cols;
  std::unordered_set<std::string> names{a.schema()[sa].name};
  for (std::size_t c = 0; c < a.num_columns(); ++c) {
    if (c == sa) continue;
    schema.push_back(a.schema()[c]);
    names.insert(a.schema()[c].name);
    a_cols.push_back(c);
  }
  for (std::size_t c = 0; c < b.num_columns(); ++c) {
    if (c == sb) continue;
    if (!names.insert(b.schema()[c].name).second)
      fail(ErrorKind::schema, "payload column '" + b.schema()[c].name + "' appears in both tables");
    schema.push_back(b.schema()[c]);
    b_cols.push_back(c);
  }

  const auto index_a = build_subject_index(a);
  const auto index_b = build_subject_index(b);
  std::vector<Row> rows;
  for (const auto& subject : index_a.subjects()) {
    const auto rows_b = index_b.rows_of(subject);
    for (auto ra : index_a.rows_of(subject)) {
      for (auto rb : rows_b) {
        Row row;
        row.reserve(schema.size());
        row.push_back(subject);
        for (auto c : a_cols) row.push_back(a.cell(ra, c));
        for (auto c : b_cols) row.push_back(b.cell(rb, c));
        rows.push_back(std::move(row));
      }
    }
  }
  return Table(std::move(schema), std::move(rows));
}

Table attach_parent(const Table& child, const Table& parent) {
  const auto sc = child.require_subject_column();
  const auto sp = parent.require_subject_column();
  if (child.schema()[sc].name != parent.schema()[sp].name)
    fail(ErrorKind::schema, "subject column mismatch between child and parent");

  Schema schema = child.schema();
  std::vector<std::size_t> p_cols;
  for (std::size_t c = 0; c < parent.num_columns(); ++c) {
    if (c == sp) continue;
    if (child.find_column(parent.schema()[c].name))
      fail(ErrorKind::schema, "parent column '" + parent.schema()[c].name + "' already in child");
    schema.push_back(parent.schema()[c]);
    p_cols.push_back(c);
  }
  std::unordered_map<std::string, std::size_t> parent_row;
  for (std::size_t r = 0; r < parent.num_rows(); ++r) {
    if (!parent_row.emplace(parent.cell(r, sp), r).second)
      fail(ErrorKind::validation, "parent table has duplicate subject '" + parent.cell(r, sp) + "'");
  }
  std::vector<Row> rows;
  rows.reserve(child.num_rows());
  for (const auto& src : child.rows()) {
    Row row = src;
    auto it = parent_row.find(src[sc]);
    for (auto c : p_cols) row.push_back(it == parent_row.end() ? std::string() : parent.cell(it->second, c));
    rows.push_back(std::move(row));
  }
  return Table(std::move(schema), std::move(rows));
}

Table select_columns(const Table& table, std::span<const std::string> names) {
  Schema schema;
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    cols.push_back(table.column_index(name));
    schema.push_back(table.schema()[cols.back()]);
  }
  std::vector<Row> rows;
  rows.reserve(table.num_rows());
  for (const auto& src : table.rows()) {
    Row row;
    row.reserve(cols.size());
    for (auto c : cols) row.push_back(src[c]);
    rows.push_back(std::move(row));
  }
  return Table(std::move(schema), std::move(rows));
}

Table drop_columns(const Table& table, std::span<const std::string> names) {
  std::set<std::string> drop;
  for (const auto& name : names) drop.insert(table.schema()[table.column_index(name)].name);
  std::vector<std::string> keep;
  for (const auto& col : table.schema())
    if (!drop.contains(col.name)) keep.push_back(col.name);
  return select_columns(table, keep);
}

Table take_rows(const Table& table, std::span<const std::size_t> indices) {
  std::vector<Row> rows;
  rows.reserve(indices.size());
  for (auto r : indices) rows.push_back(table.row(r));
  return Table(table.schema(), std::move(rows));
}

Table distinct_rows(const Table& table) {
  std::set<Row> seen;
  std::vector<Row> rows;
  for (const auto& row : table.rows())
    if (seen.insert(row).second) rows.push_back(row);
  return Table(table.schema(), std::move(rows));
}

std::string schema_fingerprint(const Schema& schema) {
  std::ostringstream out;
  for (const auto& col : schema) {
    out << col.name << ':' << to_string(col.modality) << ':'
        << (col.role == Role::subject_id ? "subject_id" : "payload") << ';';
  }
  return out.str();
}

}  // namespace greater
