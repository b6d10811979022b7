#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "greater/table.hpp"

namespace greater {

/// Empirical categorical distribution. Labels sit at integer positions
/// 0..k-1 in support order for the KS and Wasserstein computations.
struct CategoricalDistribution {
  std::vector<std::string> support;
  std::vector<double> probabilities;
  std::size_t sample_size = 0;

  // Support ordered with ordered_support().
  static CategoricalDistribution from_samples(std::span<const std::string> samples);
  // Fixed support (may contain labels with zero mass); samples outside it throw.
  static CategoricalDistribution from_samples(std::span<const std::string> samples,
                                              std::span<const std::string> support);

  void validate() const;
};

/// Both distributions re-expressed over their merged ordered support.
std::pair<CategoricalDistribution, CategoricalDistribution> align(const CategoricalDistribution& a,
                                                                  const CategoricalDistribution& b);

/// Target distribution over the rows where cond == cond_value. When a support
/// is given the result is expressed over it.
CategoricalDistribution conditional_dist(const Table& table, std::string_view target, std::string_view cond,
                                         const std::string& cond_value,
                                         std::span<const std::string> support = {});

double ks_statistic(const CategoricalDistribution& a, const CategoricalDistribution& b);
// Survival function of the limiting Kolmogorov distribution.
double kolmogorov_sf(double lambda);
/// Two-sample KS p-value: Q(sqrt(n m / (n + m)) * D) with the stored sample sizes.
double ks_p(const CategoricalDistribution& a, const CategoricalDistribution& b);
/// 1-D Wasserstein distance with unit spacing between consecutive support labels.
double w_dist(const CategoricalDistribution& a, const CategoricalDistribution& b);

enum class Metric { ks_p, w_dist };

std::string_view to_string(Metric metric) noexcept;
// ks_p: higher is better; w_dist: lower is better.
bool higher_is_better(Metric metric) noexcept;

struct ConditionScore {
  std::string cond_value;
  double weight = 0.0;      // P(cond = value) in the original table
  double similarity = 0.0;
  bool missing_in_synthetic = false;
};

struct PairScore {
  std::string cond;
  std::string target;
  Metric metric = Metric::ks_p;
  double z = 0.0;
  std::vector<ConditionScore> details;

  double recompute() const;  // weighted average of details
};

struct EvalOptions {
  // Conditioning values with fewer original rows are pooled into one "other"
  // condition. 0 disables pooling.
  std::size_t min_condition_rows = 0;
};

/// Weighted conditional similarity of target given cond. Conditionals of both
/// tables are expressed over the target's merged support; conditions missing
/// from the synthetic table score p = 0 or W = support diameter.
PairScore cross_feature_score(const Table& orig, const Table& syn, std::string_view cond, std::string_view target,
                              Metric metric, EvalOptions options = {});

struct MetricSummary {
  Metric metric = Metric::ks_p;
  std::vector<PairScore> scores;
  std::vector<double> bin_edges;     // size bins + 1
  std::vector<std::size_t> histogram;
  double max = 0.0, min = 0.0, mean = 0.0;
};

struct FidelityReport {
  std::vector<std::pair<std::string, std::string>> pairs;  // (cond, target)
  MetricSummary ks;
  MetricSummary w;

  const MetricSummary& summary(Metric m) const { return m == Metric::ks_p ? ks : w; }
};

inline constexpr std::size_t kHistogramBins = 10;

// Every ordered pair of distinct non-subject columns.
std::vector<std::pair<std::string, std::string>> all_ordered_pairs(const Table& table,
                                                                   std::span<const std::string> columns = {});

/// Scores both metrics over the pairs (all ordered pairs when empty). ks_p is
/// binned over [0, 1]; w_dist over [0, max observed] (or [0, 1] if all zero).
FidelityReport fidelity_report(const Table& orig, const Table& syn,
                               std::span<const std::pair<std::string, std::string>> pairs = {},
                               EvalOptions options = {});

struct PairDelta {
  std::string cond, target;
  double a = 0.0, b = 0.0, delta = 0.0;  // delta = a - b
  int outcome = 0;                       // +1 improved, -1 worsened, 0 unchanged
};

struct MetricComparison {
  Metric metric = Metric::ks_p;
  std::vector<PairDelta> pairs;
  std::size_t improved = 0, worsened = 0, unchanged = 0;
  double max_delta = 0.0, min_delta = 0.0, mean_delta = 0.0;
};

struct ReportComparison {
  MetricComparison ks;
  MetricComparison w;
};

inline constexpr double kTieTolerance = 1e-12;

/// Classifies each pair of report `a` against baseline `b` by metric orientation.
ReportComparison compare_reports(const FidelityReport& a, const FidelityReport& b);

/// Max, min and mean of the improved/worsened/unchanged counts across trials,
/// one row per metric and outcome, as CSV.
std::string ablation_table(std::span<const ReportComparison> trials);

std::string to_json(const FidelityReport& report);
std::string to_long_csv(const FidelityReport& report);       // cond,target,metric,z
std::string to_histogram_csv(const FidelityReport& report);  // metric,bin_lo,bin_hi,count
std::string to_json(const ReportComparison& comparison);
std::string to_csv(const ReportComparison& comparison);

}  // namespace greater
