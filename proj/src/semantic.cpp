#include "greater/semantic.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "greater/csv.hpp"
#include "greater/error.hpp"
#include "greater/labels.hpp"
#include "greater/random.hpp"

namespace greater {

std::string_view to_string(MappingMode mode) noexcept {
  return mode == MappingMode::differentiability ? "differentiability" : "understandability";
}

ColumnMapping::ColumnMapping(std::string column, std::vector<std::pair<std::string, std::string>> entries)
    : column_(std::move(column)), entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [orig, enh] = entries_[i];
    if (orig.empty() || enh.empty())
      fail(ErrorKind::validation, "column '" + column_ + "': mapping labels must be non-empty");
    if (!by_original_.emplace(orig, i).second)
      fail(ErrorKind::validation, "column '" + column_ + "': original label '" + orig + "' mapped twice");
    if (!by_enhanced_.emplace(enh, i).second)
      fail(ErrorKind::validation, "column '" + column_ + "': enhanced label '" + enh + "' used twice");
  }
}

const std::string* ColumnMapping::forward(const std::string& original) const {
  auto it = by_original_.find(original);
  return it == by_original_.end() ? nullptr : &entries_[it->second].second;
}

const std::string* ColumnMapping::inverse(const std::string& enhanced) const {
  auto it = by_enhanced_.find(enhanced);
  return it == by_enhanced_.end() ? nullptr : &entries_[it->second].first;
}

MappingSystem::MappingSystem(MappingMode mode, std::vector<ColumnMapping> columns)
    : mode_(mode), columns_(std::move(columns)) {
  std::unordered_map<std::string, std::string> owner;
  std::unordered_set<std::string> names;
  for (const auto& col : columns_) {
    if (!names.insert(col.column()).second)
      fail(ErrorKind::validation, "column '" + col.column() + "' appears twice in mapping");
    for (const auto& [orig, enh] : col.entries()) {
      auto [it, inserted] = owner.emplace(enh, col.column());
      if (!inserted) {
        fail(ErrorKind::validation, "enhanced label '" + enh + "' is used by both '" + it->second + "' and '" +
                                        col.column() + "'");
      }
    }
  }
}

std::vector<std::string> MappingSystem::selected_columns() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) out.push_back(c.column());
  return out;
}

std::size_t MappingSystem::total_categories() const noexcept {
  std::size_t n = 0;
  for (const auto& c : columns_) n += c.size();
  return n;
}

const ColumnMapping* MappingSystem::find(std::string_view column) const {
  for (const auto& c : columns_)
    if (c.column() == column) return &c;
  return nullptr;
}

bool MappingSystem::operator==(const MappingSystem& other) const {
  if (mode_ != other.mode_ || columns_.size() != other.columns_.size()) return false;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].column() != other.columns_[i].column() || columns_[i].entries() != other.columns_[i].entries())
      return false;
  }
  return true;
}

namespace {

// Observed non-missing labels of a column across all tables containing it.
std::vector<std::string> observed_labels(std::span<const Table> tables, const std::string& column,
                                         bool require_categorical) {
  std::vector<std::string> labels;
  bool found = false;
  for (const auto& t : tables) {
    auto c = t.find_column(column);
    if (!c) continue;
    found = true;
    const auto& spec = t.schema()[*c];
    if (spec.role == Role::subject_id) fail(ErrorKind::validation, "cannot map subject column '" + column + "'");
    if (spec.modality == Modality::numerical || (require_categorical && spec.modality != Modality::categorical))
      fail(ErrorKind::validation, "column '" + column + "' is not categorical");
    for (const auto& row : t.rows())
      if (!row[*c].empty()) labels.push_back(row[*c]);
  }
  if (!found) fail(ErrorKind::schema, "mapping names unknown column '" + column + "'");
  return ordered_support(std::move(labels));
}

}  // namespace

MappingSystem build_differentiability_mapping(std::span<const Table> tables, std::span<const std::string> selected,
                                              std::span<const std::string> name_pool, std::uint64_t seed) {
  std::vector<std::vector<std::string>> labels;
  std::size_t n = 0;
  std::set<std::string> seen_cols;
  for (const auto& col : selected) {
    if (!seen_cols.insert(col).second) fail(ErrorKind::validation, "column '" + col + "' selected twice");
    labels.push_back(observed_labels(tables, col, true));
    n += labels.back().size();
  }
  if (name_pool.size() < n) {
    fail(ErrorKind::validation, "name pool has " + std::to_string(name_pool.size()) + " entries but " +
                                    std::to_string(n) + " categories need distinct names");
  }
  std::unordered_set<std::string> pool_set;
  for (const auto& name : name_pool) {
    if (name.empty()) fail(ErrorKind::validation, "name pool contains an empty entry");
    if (!pool_set.insert(name).second) fail(ErrorKind::validation, "name pool repeats '" + name + "'");
  }
  for (const auto& t : tables)
    for (const auto& row : t.rows())
      for (const auto& cell : row)
        if (pool_set.contains(cell))
          fail(ErrorKind::validation, "name pool entry '" + cell + "' already occurs in the table");

  std::vector<std::size_t> order(name_pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<ColumnMapping> columns;
  std::size_t next = 0;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& label : labels[k]) entries.emplace_back(label, name_pool[order[next++]]);
    columns.emplace_back(selected[k], std::move(entries));
  }
  return MappingSystem(MappingMode::differentiability, std::move(columns));
}

MappingSystem build_differentiability_mapping(const Table& table, std::span<const std::string> selected,
                                              std::span<const std::string> name_pool, std::uint64_t seed) {
  return build_differentiability_mapping(std::span<const Table>(&table, 1), selected, name_pool, seed);
}

MappingDocument parse_mapping_document(std::string_view text) {
  MappingDocument doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  constexpr std::string_view arrow = " => ";
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.ends_with('\r')) line.remove_suffix(1);

    if (auto a = line.find(arrow); a != std::string_view::npos) {
      if (doc.sections.empty())
        fail(ErrorKind::parse, "mapping line " + std::to_string(line_no) + ": entry before any [column] section");
      doc.sections.back().second.emplace_back(std::string(line.substr(0, a)), std::string(line.substr(a + arrow.size())));
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[' && line.back() == ']' && line.size() > 2) {
      doc.sections.emplace_back(std::string(line.substr(1, line.size() - 2)),
                                std::vector<std::pair<std::string, std::string>>{});
      continue;
    }
    if (auto colon = line.find(": "); colon != std::string_view::npos && doc.sections.empty()) {
      doc.metadata[std::string(line.substr(0, colon))] = std::string(line.substr(colon + 2));
      continue;
    }
    fail(ErrorKind::parse, "mapping line " + std::to_string(line_no) + ": cannot parse '" + std::string(line) + "'");
  }
  return doc;
}

MappingSystem build_understandability_mapping(const MappingDocument& doc, std::span<const Table> tables) {
  std::vector<ColumnMapping> columns;
  for (const auto& [column, entries] : doc.sections) {
    const auto observed = observed_labels(tables, column, false);
    ColumnMapping mapping(column, entries);
    for (const auto& label : observed) {
      if (!mapping.forward(label))
        fail(ErrorKind::validation, "column '" + column + "': category '" + label + "' has no mapping entry");
    }
    columns.push_back(std::move(mapping));
  }
  return MappingSystem(MappingMode::understandability, std::move(columns));
}

MappingSystem build_understandability_mapping(const MappingDocument& doc, const Table& table) {
  return build_understandability_mapping(doc, std::span<const Table>(&table, 1));
}

namespace {

template <typename Lookup, typename OnMiss>
std::vector<Row> substitute(const Table& table, const MappingSystem& mapping, Lookup lookup, OnMiss on_miss) {
  std::vector<std::pair<std::size_t, const ColumnMapping*>> cols;
  for (const auto& cm : mapping.columns())
    if (auto c = table.find_column(cm.column())) cols.emplace_back(*c, &cm);

  std::vector<Row> rows;
  rows.reserve(table.num_rows());
  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    Row row = table.row(r);
    bool keep = true;
    for (const auto& [c, cm] : cols) {
      auto& cell = row[c];
      if (cell.empty()) continue;
      if (const std::string* to = lookup(*cm, cell)) {
        cell = *to;
      } else {
        on_miss(r, cm->column(), cell);
        keep = false;
        break;
      }
    }
    if (keep) rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Table apply_mapping(const Table& table, const MappingSystem& mapping) {
  auto rows = substitute(
      table, mapping, [](const ColumnMapping& cm, const std::string& v) { return cm.forward(v); },
      [](std::size_t r, const std::string& col, const std::string& v) {
        fail(ErrorKind::validation,
             "row " + std::to_string(r + 1) + ", column '" + col + "': label '" + v + "' has no mapping entry");
      });
  return Table(table.schema(), std::move(rows));
}

Table invert_mapping(const Table& table, const MappingSystem& mapping) {
  auto rows = substitute(
      table, mapping, [](const ColumnMapping& cm, const std::string& v) { return cm.inverse(v); },
      [](std::size_t r, const std::string& col, const std::string& v) {
        fail(ErrorKind::validation, "row " + std::to_string(r + 1) + ", column '" + col + "': label '" + v +
                                        "' is outside the mapping range");
      });
  return Table(table.schema(), std::move(rows));
}

InversionResult invert_mapping_lenient(const Table& table, const MappingSystem& mapping) {
  std::vector<RowRejection> rejected;
  auto rows = substitute(
      table, mapping, [](const ColumnMapping& cm, const std::string& v) { return cm.inverse(v); },
      [&](std::size_t r, const std::string& col, const std::string& v) { rejected.push_back({r, col, v}); });
  return {Table(table.schema(), std::move(rows)), std::move(rejected)};
}

std::string serialize_mapping(const MappingSystem& mapping) {
  std::ostringstream out;
  out << "# greater mapping system\n";
  out << "mode: " << to_string(mapping.mode()) << '\n';
  out << "columns: " << mapping.columns().size() << '\n';
  out << "categories: " << mapping.total_categories() << '\n';
  auto check = [](const std::string& s, bool original) {
    if (s.find_first_of("\r\n") != std::string::npos || (original && s.find(" => ") != std::string::npos))
      fail(ErrorKind::validation, "label '" + s + "' cannot be written to a mapping document");
  };
  for (const auto& cm : mapping.columns()) {
    check(cm.column(), false);
    out << '[' << cm.column() << "]\n";
    for (const auto& [orig, enh] : cm.entries()) {
      check(orig, true);
      check(enh, false);
      out << orig << " => " << enh << '\n';
    }
  }
  return out.str();
}

MappingSystem deserialize_mapping(std::string_view text) {
  const auto doc = parse_mapping_document(text);
  auto mode_it = doc.metadata.find("mode");
  if (mode_it == doc.metadata.end()) fail(ErrorKind::parse, "mapping file lacks a 'mode' header");
  MappingMode mode;
  if (mode_it->second == "differentiability")
    mode = MappingMode::differentiability;
  else if (mode_it->second == "understandability")
    mode = MappingMode::understandability;
  else
    fail(ErrorKind::parse, "unknown mapping mode '" + mode_it->second + "'");
  std::vector<ColumnMapping> columns;
  for (const auto& [column, entries] : doc.sections) columns.emplace_back(column, entries);
  MappingSystem mapping(mode, std::move(columns));
  if (auto it = doc.metadata.find("categories");
      it != doc.metadata.end() && it->second != std::to_string(mapping.total_categories()))
    fail(ErrorKind::parse, "mapping file category count does not match its entries");
  return mapping;
}

bool MappingStore::exists() const { return std::filesystem::exists(path_); }

void MappingStore::save(const MappingSystem& mapping) const {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  write_file(path_, serialize_mapping(mapping));
}

MappingSystem MappingStore::load() const {
  if (!exists()) fail(ErrorKind::io, "mapping not found at '" + path_.string() + "' (destroyed or never saved)");
  return deserialize_mapping(read_file(path_));
}

MappingStore::DestroyOutcome MappingStore::destroy() const {
  std::error_code ec;
  if (!std::filesystem::exists(path_, ec)) return DestroyOutcome::already_destroyed;
  const auto size = std::filesystem::file_size(path_, ec);
  if (!ec) {
    std::ofstream out(path_, std::ios::binary | std::ios::in | std::ios::out);
    if (!out) fail(ErrorKind::io, "cannot open mapping '" + path_.string() + "' for destruction");
    const std::string zeros(size, '\0');
    out.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));
    out.flush();
    if (!out) fail(ErrorKind::io, "failed to overwrite mapping '" + path_.string() + "'");
  }
  if (!std::filesystem::remove(path_, ec) || ec)
    fail(ErrorKind::io, "failed to remove mapping '" + path_.string() + "': " + ec.message());
  return DestroyOutcome::destroyed;
}

std::string replace_all(std::string_view text, std::string_view from, std::string_view to) {
  std::string out;
  if (from.empty()) return std::string(text);
  std::size_t pos = 0;
  while (true) {
    auto hit = text.find(from, pos);
    if (hit == std::string_view::npos) break;
    out.append(text.substr(pos, hit - pos));
    out.append(to);
    pos = hit + from.size();
  }
  out.append(text.substr(pos));
  return out;
}

namespace {

std::vector<std::size_t> rule_scope(const Table& table, const RewriteRule& rule) {
  std::vector<std::size_t> cols;
  if (rule.columns.empty()) {
    for (std::size_t c = 0; c < table.num_columns(); ++c) {
      const auto& spec = table.schema()[c];
      if (spec.role == Role::payload && spec.modality != Modality::numerical) cols.push_back(c);
    }
  } else {
    for (const auto& name : rule.columns) cols.push_back(table.column_index(name));
  }
  return cols;
}

}  // namespace

Table apply_rewrites(const Table& table, std::span<const RewriteRule> rules) {
  std::vector<Row> rows = table.rows();
  for (const auto& rule : rules) {
    if (rule.pattern.empty()) fail(ErrorKind::validation, "rewrite pattern must be non-empty");
    if (rule.replacement.empty() || rule.replacement == rule.pattern)
      fail(ErrorKind::validation, "rewrite of '" + rule.pattern + "' needs a distinct non-empty replacement");
    for (auto c : rule_scope(table, rule)) {
      for (std::size_t r = 0; r < rows.size(); ++r) {
        auto& cell = rows[r][c];
        if (cell.find(rule.replacement) != std::string::npos) {
          fail(ErrorKind::validation, "rewrite '" + rule.pattern + "' -> '" + rule.replacement +
                                          "' is ambiguous: row " + std::to_string(r + 1) + ", column '" +
                                          table.schema()[c].name + "' already contains the replacement");
        }
        auto rewritten = replace_all(cell, rule.pattern, rule.replacement);
        if (replace_all(rewritten, rule.replacement, rule.pattern) != cell) {
          fail(ErrorKind::validation, "rewrite '" + rule.pattern + "' -> '" + rule.replacement +
                                          "' is not reversible on row " + std::to_string(r + 1) + ", column '" +
                                          table.schema()[c].name + "'");
        }
        cell = std::move(rewritten);
      }
    }
  }
  return Table(table.schema(), std::move(rows));
}

Table reverse_rewrites(const Table& table, std::span<const RewriteRule> rules) {
  std::vector<Row> rows = table.rows();
  for (auto it = rules.rbegin(); it != rules.rend(); ++it) {
    for (auto c : rule_scope(table, *it))
      for (auto& row : rows) row[c] = replace_all(row[c], it->replacement, it->pattern);
  }
  return Table(table.schema(), std::move(rows));
}

std::vector<std::string> load_name_pool(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<std::string> pool;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) pool.push_back(line);
  }
  return pool;
}

std::vector<std::string> filter_pool(std::span<const std::string> pool, std::span<const Table> tables) {
  std::unordered_set<std::string> used;
  for (const auto& t : tables)
    for (const auto& row : t.rows())
      for (const auto& cell : row) used.insert(cell);
  std::vector<std::string> out;
  for (const auto& name : pool)
    if (!used.contains(name)) out.push_back(name);
  return out;
}

}  // namespace greater
