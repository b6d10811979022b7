#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "greater/table.hpp"

namespace greater {

/// r x c contingency counts; rows index categories of the first variable.
struct Contingency {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> counts;  // row-major

  std::uint64_t at(std::size_t i, std::size_t j) const { return counts[i * cols + j]; }
};

Contingency contingency(std::span<const std::string> a, std::span<const std::string> b);

struct CramersVOptions {
  bool bias_corrected = false;
};

/// Cramér's V, sqrt(chi2 / (N * min(r-1, c-1))), with r and c the numbers of
/// non-empty rows and columns. Zero when either variable is constant or N < 2.
double cramers_v(const Contingency& table, CramersVOptions options = {});
double cramers_v(std::span<const std::string> a, std::span<const std::string> b, CramersVOptions options = {});

class AssociationMatrix {
 public:
  AssociationMatrix(std::vector<std::string> labels, std::vector<double> values);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  double at(std::size_t i, std::size_t j) const { return values_[i * labels_.size() + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * labels_.size(), labels_.size());
  }
  std::vector<double> off_diagonal() const;  // upper triangle, row-major

  std::string to_csv() const;
  std::string to_long_csv() const;  // col_a,col_b,v for every ordered pair

 private:
  std::vector<std::string> labels_;
  std::vector<double> values_;
};

AssociationMatrix association_matrix(const Table& table, std::span<const std::string> cols,
                                     CramersVOptions options = {});

/// Drops declared identifier-like columns before association analysis. At
/// least one payload column must remain.
Table exclude_noisy_columns(const Table& table, std::span<const std::string> cols);

struct Threshold {
  enum class Kind { mean, median, fixed };
  Kind kind = Kind::mean;
  double value = 0.0;  // used by fixed

  static Threshold mean() { return {Kind::mean, 0.0}; }
  static Threshold median() { return {Kind::median, 0.0}; }
  static Threshold fixed(double v) { return {Kind::fixed, v}; }
};

struct Cut {
  enum class Kind { distance, clusters, median_height };
  Kind kind = Kind::median_height;
  double distance = 0.0;
  std::size_t clusters = 0;

  static Cut at_distance(double d) { return {Kind::distance, d, 0}; }
  static Cut into_clusters(std::size_t k) { return {Kind::clusters, 0.0, k}; }
  static Cut at_median_height() { return {Kind::median_height, 0.0, 0}; }
};

struct IndependencePartition {
  std::vector<std::string> independent_cols;
  std::vector<std::string> core_cols;
  std::string method;       // threshold_mean | threshold_median | threshold_fixed | hierarchical
  double resolved = 0.0;    // threshold value or cut height actually used
};

/// A column is independent iff every off-diagonal entry of its row is strictly
/// below the resolved threshold (mean or median of all off-diagonal entries,
/// or the fixed value).
IndependencePartition threshold_independent(const AssociationMatrix& matrix, Threshold threshold);

struct Merge {
  std::size_t left = 0;   // cluster ids: 0..n-1 are leaves, n+k is merge k
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

/// Average-linkage agglomerative clustering of the matrix rows under
/// Euclidean distance. Ties go to the pair with the smallest cluster ids.
std::vector<Merge> average_linkage(const AssociationMatrix& matrix);

/// Clusters the columns and cuts the dendrogram; singleton clusters are the
/// independent columns, members of larger clusters form the core.
IndependencePartition hierarchical_independent(const AssociationMatrix& matrix, Cut cut);

/// For each independent column: subject -> observed values in source order.
class SubjectPools {
 public:
  void add(const ColumnSpec& spec, const std::string& subject, std::string value);

  const std::vector<ColumnSpec>& columns() const noexcept { return columns_; }
  // nullptr when the (column, subject) pool is absent or empty.
  const std::vector<std::string>* pool(const std::string& column, const std::string& subject) const;
  const std::map<std::string, std::vector<std::string>>* pools_of(const std::string& column) const;

  std::string to_json() const;

 private:
  std::vector<ColumnSpec> columns_;
  std::map<std::string, std::map<std::string, std::vector<std::string>>> pools_;
};

struct CoreReduction {
  Table core;
  SubjectPools pools;
};

/// Removes the independent columns from the flattened table, keeps the first
/// copy of each remaining distinct row and builds subject pools for the removed
/// columns. Pools come from the first source table holding each column (the
/// original child tables); the flattened table is used when no source has it.
/// Payload columns named in neither list stay in the core.
CoreReduction reduce_core(const Table& flattened, const IndependencePartition& partition,
                          std::span<const Table> sources = {});

/// Re-attaches pooled columns: each core row draws every pooled column
/// uniformly with replacement from its subject's pool. Row r uses its own
/// stream derived from (seed, r).
Table bootstrap_append(const Table& core, const SubjectPools& pools, std::uint64_t seed);

std::string to_json(const IndependencePartition& partition);

}  // namespace greater
