#include "greater/contextual.hpp"

#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <unordered_map>

#include "greater/error.hpp"

namespace greater {

std::vector<std::string> ContextualReport::contextual_columns() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.is_contextual) out.push_back(c.column);
  return out;
}

ContextualReport detect_contextual(const Table& child, double m) {
  if (!(m > 0.0 && m <= 1.0)) fail(ErrorKind::validation, "contextual threshold m must lie in (0, 1]");
  const auto sc = child.require_subject_column();
  if (child.empty()) fail(ErrorKind::validation, "cannot detect contextual columns on an empty table");
  if (child.payload_names().empty()) fail(ErrorKind::validation, "child table has no payload columns");

  const auto index = build_subject_index(child);
  ContextualReport report;
  report.threshold = m;
  report.subjects = index.size();
  for (std::size_t c = 0; c < child.num_columns(); ++c) {
    if (c == sc) continue;
    std::size_t constant = 0;
    for (const auto& subject : index.subjects()) {
      const auto rows = index.rows_of(subject);
      const auto& first = child.cell(rows.front(), c);
      bool same = true;
      for (auto r : rows.subspan(1)) {
        if (child.cell(r, c) != first) {
          same = false;
          break;
        }
      }
      constant += same;
    }
    const double fraction = static_cast<double>(constant) / static_cast<double>(index.size());
    report.columns.push_back({child.schema()[c].name, fraction, fraction >= m});
  }
  return report;
}

ParentExtraction extract_parent(const Table& child, std::span<const std::string> contextual_cols) {
  const auto sc = child.require_subject_column();
  std::vector<std::size_t> cols;
  std::set<std::string> unique;
  for (const auto& name : contextual_cols) {
    const auto c = child.column_index(name);
    if (c == sc) fail(ErrorKind::validation, "subject column cannot be contextual");
    if (unique.insert(name).second) cols.push_back(c);
  }

  Schema schema{child.schema()[sc]};
  for (auto c : cols) schema.push_back(child.schema()[c]);

  const auto index = build_subject_index(child);
  std::vector<Row> rows;
  rows.reserve(index.size());
  for (const auto& subject : index.subjects()) {
    Row row{subject};
    for (auto c : cols) {
      std::map<std::string, std::size_t> counts;  // ordered: ties resolve to the smallest label
      for (auto r : index.rows_of(subject)) ++counts[child.cell(r, c)];
      auto best = counts.begin();
      for (auto it = counts.begin(); it != counts.end(); ++it)
        if (it->second > best->second) best = it;
      row.push_back(best->first);
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::string> drop;
  for (auto c : cols) drop.push_back(child.schema()[c].name);
  return {Table(std::move(schema), std::move(rows)), drop_columns(child, drop)};
}

Table merge_parents(const Table& first, const Table& second) {
  const auto s1 = first.require_subject_column();
  const auto s2 = second.require_subject_column();
  if (first.schema()[s1].name != second.schema()[s2].name)
    fail(ErrorKind::schema, "parents use different subject columns");

  Schema schema = first.schema();
  // Position of each output column in the second parent, if any.
  std::vector<std::optional<std::size_t>> from_second(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c)
    if (c != s1) from_second[c] = second.find_column(schema[c].name);
  for (std::size_t c = 0; c < second.num_columns(); ++c) {
    if (c == s2 || first.find_column(second.schema()[c].name)) continue;
    schema.push_back(second.schema()[c]);
    from_second.push_back(c);
  }

  std::unordered_map<std::string, std::size_t> second_row;
  for (std::size_t r = 0; r < second.num_rows(); ++r) second_row.emplace(second.cell(r, s2), r);

  std::vector<Row> rows;
  std::set<std::string> seen;
  for (const auto& src : first.rows()) {
    Row row = src;
    row.resize(schema.size());
    auto it = second_row.find(src[s1]);
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (c == s1 || !from_second[c] || it == second_row.end()) continue;
      if (c >= first.num_columns() || row[c].empty()) row[c] = second.cell(it->second, *from_second[c]);
    }
    seen.insert(src[s1]);
    rows.push_back(std::move(row));
  }
  for (const auto& src : second.rows()) {
    if (seen.contains(src[s2])) continue;
    Row row(schema.size());
    row[s1] = src[s2];
    for (std::size_t c = 0; c < schema.size(); ++c)
      if (c != s1 && from_second[c]) row[c] = src[*from_second[c]];
    rows.push_back(std::move(row));
  }
  return Table(std::move(schema), std::move(rows));
}

std::string to_json(const ContextualReport& report) {
  nlohmann::ordered_json j;
  j["threshold"] = report.threshold;
  j["subjects"] = report.subjects;
  auto& cols = j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : report.columns)
    cols.push_back({{"column", c.column}, {"consistency", c.fraction}, {"contextual", c.is_contextual}});
  return j.dump(2);
}

}  // namespace greater
