#pragma once

#include <span>
#include <string>
#include <vector>

#include "greater/table.hpp"

namespace greater {

inline constexpr double kDefaultContextualThreshold = 0.98;

struct ColumnConsistency {
  std::string column;
  double fraction = 0.0;  // share of subjects whose rows agree on this column
  bool is_contextual = false;
};

struct ContextualReport {
  double threshold = kDefaultContextualThreshold;
  std::size_t subjects = 0;
  std::vector<ColumnConsistency> columns;

  std::vector<std::string> contextual_columns() const;
};

/// Per payload column, the fraction of subjects whose values are constant
/// across all of their rows. A column is contextual iff fraction >= m.
/// Subjects with a single row count as constant.
ContextualReport detect_contextual(const Table& child, double m = kDefaultContextualThreshold);

struct ParentExtraction {
  Table parent;
  Table residual_child;
};

/// One parent row per subject (first-appearance order) holding each contextual
/// column's per-subject mode, ties broken by the lexicographically smallest
/// value. The residual child is the child without the contextual columns.
ParentExtraction extract_parent(const Table& child, std::span<const std::string> contextual_cols);

/// Outer join of two parents on the subject key. Subjects missing on one side
/// receive missing markers for that side's columns; a column present in both
/// keeps the first parent's value unless it is missing there.
Table merge_parents(const Table& first, const Table& second);

std::string to_json(const ContextualReport& report);

}  // namespace greater
