#include "greater/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "greater/csv.hpp"
#include "greater/error.hpp"
#include "greater/labels.hpp"

namespace greater {

CategoricalDistribution CategoricalDistribution::from_samples(std::span<const std::string> samples) {
  auto support = ordered_support({samples.begin(), samples.end()});
  return from_samples(samples, support);
}

CategoricalDistribution CategoricalDistribution::from_samples(std::span<const std::string> samples,
                                                              std::span<const std::string> support) {
  CategoricalDistribution d;
  d.support.assign(support.begin(), support.end());
  std::unordered_map<std::string_view, std::size_t> pos;
  for (std::size_t i = 0; i < d.support.size(); ++i)
    if (!pos.emplace(d.support[i], i).second) fail(ErrorKind::validation, "support repeats '" + d.support[i] + "'");
  std::vector<std::size_t> counts(d.support.size(), 0);
  for (const auto& s : samples) {
    auto it = pos.find(s);
    if (it == pos.end()) fail(ErrorKind::validation, "sample '" + s + "' is outside the support");
    ++counts[it->second];
  }
  d.sample_size = samples.size();
  d.probabilities.resize(counts.size(), 0.0);
  if (d.sample_size > 0)
    for (std::size_t i = 0; i < counts.size(); ++i)
      d.probabilities[i] = static_cast<double>(counts[i]) / static_cast<double>(d.sample_size);
  return d;
}

void CategoricalDistribution::validate() const {
  if (sample_size == 0 || support.empty()) fail(ErrorKind::validation, "distribution is empty");
  if (probabilities.size() != support.size()) fail(ErrorKind::validation, "support/probability size mismatch");
  if (std::set<std::string>(support.begin(), support.end()).size() != support.size())
    fail(ErrorKind::validation, "support labels must be distinct");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) fail(ErrorKind::validation, "negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) fail(ErrorKind::validation, "probabilities do not sum to 1");
}

std::pair<CategoricalDistribution, CategoricalDistribution> align(const CategoricalDistribution& a,
                                                                  const CategoricalDistribution& b) {
  if (a.support == b.support) return {a, b};
  std::vector<std::string> labels = a.support;
  labels.insert(labels.end(), b.support.begin(), b.support.end());
  const auto merged = ordered_support(std::move(labels));
  auto reexpress = [&](const CategoricalDistribution& d) {
    std::unordered_map<std::string_view, double> p;
    for (std::size_t i = 0; i < d.support.size(); ++i) p[d.support[i]] += d.probabilities[i];
    CategoricalDistribution out{merged, std::vector<double>(merged.size(), 0.0), d.sample_size};
    for (std::size_t i = 0; i < merged.size(); ++i)
      if (auto it = p.find(merged[i]); it != p.end()) out.probabilities[i] = it->second;
    return out;
  };
  return {reexpress(a), reexpress(b)};
}

CategoricalDistribution conditional_dist(const Table& table, std::string_view target, std::string_view cond,
                                         const std::string& cond_value, std::span<const std::string> support) {
  const auto t = table.column_index(target);
  const auto c = table.column_index(cond);
  std::vector<std::string> samples;
  for (const auto& row : table.rows())
    if (row[c] == cond_value) samples.push_back(row[t]);
  if (samples.empty())
    fail(ErrorKind::validation, "condition value '" + cond_value + "' does not occur in column '" +
                                    std::string(cond) + "'");
  return support.empty() ? CategoricalDistribution::from_samples(samples)
                         : CategoricalDistribution::from_samples(samples, support);
}

double ks_statistic(const CategoricalDistribution& a, const CategoricalDistribution& b) {
  a.validate();
  b.validate();
  const auto [x, y] = align(a, b);
  double fa = 0.0, fb = 0.0, d = 0.0;
  for (std::size_t i = 0; i < x.support.size(); ++i) {
    fa += x.probabilities[i];
    fb += y.probabilities[i];
    d = std::max(d, std::abs(fa - fb));
  }
  return std::min(d, 1.0);
}

double kolmogorov_sf(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-theta form, rapidly convergent for small lambda.
    constexpr double pi = std::numbers::pi;
    const double y = std::exp(-pi * pi / (8.0 * lambda * lambda));
    const double cdf = std::sqrt(2.0 * pi) / lambda * (y + std::pow(y, 9) + std::pow(y, 25) + std::pow(y, 49));
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  const double x = std::exp(-2.0 * lambda * lambda);
  return std::clamp(2.0 * (x - std::pow(x, 4) + std::pow(x, 9) - std::pow(x, 16)), 0.0, 1.0);
}

double ks_p(const CategoricalDistribution& a, const CategoricalDistribution& b) {
  const double d = ks_statistic(a, b);
  if (d == 0.0) return 1.0;
  const double n = static_cast<double>(a.sample_size), m = static_cast<double>(b.sample_size);
  return kolmogorov_sf(std::sqrt(n * m / (n + m)) * d);
}

double w_dist(const CategoricalDistribution& a, const CategoricalDistribution& b) {
  a.validate();
  b.validate();
  const auto [x, y] = align(a, b);
  double fa = 0.0, fb = 0.0, w = 0.0;
  for (std::size_t i = 0; i + 1 < x.support.size(); ++i) {
    fa += x.probabilities[i];
    fb += y.probabilities[i];
    w += std::abs(fa - fb);
  }
  return w;
}

std::string_view to_string(Metric metric) noexcept { return metric == Metric::ks_p ? "ks_p" : "w_dist"; }
bool higher_is_better(Metric metric) noexcept { return metric == Metric::ks_p; }

double PairScore::recompute() const {
  double z = 0.0;
  for (const auto& d : details) z += d.weight * d.similarity;
  return z;
}

namespace {

const std::string kOtherBucket = "(other)";

struct Grouped {
  std::vector<std::string> order;  // condition values, ordered
  std::unordered_map<std::string, std::vector<std::string>> targets;
  std::size_t rows = 0;
};

Grouped group_by(const Table& t, std::size_t cond, std::size_t target, const std::unordered_set<std::string>& rare) {
  Grouped g;
  g.rows = t.num_rows();
  for (const auto& row : t.rows()) {
    const std::string& key = rare.contains(row[cond]) ? kOtherBucket : row[cond];
    g.targets[key].push_back(row[target]);
  }
  std::vector<std::string> keys;
  for (const auto& [k, _] : g.targets) keys.push_back(k);
  g.order = ordered_support(std::move(keys));
  return g;
}

void check_schema(const Table& orig, const Table& syn) {
  if (schema_fingerprint(orig.schema()) != schema_fingerprint(syn.schema()))
    fail(ErrorKind::schema, "original and synthetic tables have different schemas");
}

}  // namespace

PairScore cross_feature_score(const Table& orig, const Table& syn, std::string_view cond, std::string_view target,
                              Metric metric, EvalOptions options) {
  check_schema(orig, syn);
  if (orig.empty()) fail(ErrorKind::validation, "original table is empty");
  const auto c = orig.column_index(cond);
  const auto t = orig.column_index(target);
  if (c == t) fail(ErrorKind::validation, "conditioning and target column must differ");

  std::unordered_set<std::string> rare;
  if (options.min_condition_rows > 0) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& row : orig.rows()) ++counts[row[c]];
    for (const auto& [v, n] : counts)
      if (n < options.min_condition_rows) rare.insert(v);
  }
  const auto go = group_by(orig, c, t, rare);
  const auto gs = group_by(syn, c, t, rare);

  std::vector<std::string> labels = orig.column_values(t);
  const auto syn_targets = syn.column_values(t);
  labels.insert(labels.end(), syn_targets.begin(), syn_targets.end());
  const auto support = ordered_support(std::move(labels));
  const double diameter = support.empty() ? 0.0 : static_cast<double>(support.size() - 1);

  PairScore score{std::string(cond), std::string(target), metric, 0.0, {}};
  double weighted = 0.0;  // sum of count * similarity, divided once so z = 1 stays exact
  for (const auto& value : go.order) {
    const auto& o = go.targets.at(value);
    ConditionScore cs{value, static_cast<double>(o.size()) / static_cast<double>(go.rows), 0.0, false};
    auto it = gs.targets.find(value);
    if (it == gs.targets.end()) {
      cs.missing_in_synthetic = true;
      cs.similarity = metric == Metric::ks_p ? 0.0 : diameter;
    } else {
      const auto po = CategoricalDistribution::from_samples(o, support);
      const auto ps = CategoricalDistribution::from_samples(it->second, support);
      cs.similarity = metric == Metric::ks_p ? ks_p(po, ps) : w_dist(po, ps);
    }
    weighted += static_cast<double>(o.size()) * cs.similarity;
    score.details.push_back(std::move(cs));
  }
  score.z = weighted / static_cast<double>(go.rows);
  return score;
}

std::vector<std::pair<std::string, std::string>> all_ordered_pairs(const Table& table,
                                                                   std::span<const std::string> columns) {
  std::vector<std::string> cols;
  if (columns.empty()) {
    for (const auto& c : table.schema())
      if (c.role == Role::payload) cols.push_back(c.name);
  } else {
    for (const auto& name : columns) cols.push_back(table.column(name).name);
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& a : cols)
    for (const auto& b : cols)
      if (a != b) pairs.emplace_back(a, b);
  return pairs;
}

namespace {

MetricSummary summarize(Metric metric, std::vector<PairScore> scores) {
  MetricSummary s;
  s.metric = metric;
  s.scores = std::move(scores);
  double hi = 1.0;
  if (metric == Metric::w_dist) {
    hi = 0.0;
    for (const auto& p : s.scores) hi = std::max(hi, p.z);
    if (hi == 0.0) hi = 1.0;
  }
  for (std::size_t b = 0; b <= kHistogramBins; ++b)
    s.bin_edges.push_back(hi * static_cast<double>(b) / static_cast<double>(kHistogramBins));
  s.histogram.assign(kHistogramBins, 0);
  if (s.scores.empty()) return s;

  s.max = -std::numeric_limits<double>::infinity();
  s.min = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& p : s.scores) {
    auto bin = static_cast<std::size_t>(std::floor(p.z / hi * static_cast<double>(kHistogramBins)));
    ++s.histogram[std::min(bin, kHistogramBins - 1)];
    s.max = std::max(s.max, p.z);
    s.min = std::min(s.min, p.z);
    total += p.z;
  }
  s.mean = total / static_cast<double>(s.scores.size());
  return s;
}

}  // namespace

FidelityReport fidelity_report(const Table& orig, const Table& syn,
                               std::span<const std::pair<std::string, std::string>> pairs, EvalOptions options) {
  check_schema(orig, syn);
  FidelityReport report;
  if (pairs.empty())
    report.pairs = all_ordered_pairs(orig);
  else
    report.pairs.assign(pairs.begin(), pairs.end());

  std::vector<PairScore> ks, w;
  for (const auto& [cond, target] : report.pairs) {
    ks.push_back(cross_feature_score(orig, syn, cond, target, Metric::ks_p, options));
    w.push_back(cross_feature_score(orig, syn, cond, target, Metric::w_dist, options));
  }
  report.ks = summarize(Metric::ks_p, std::move(ks));
  report.w = summarize(Metric::w_dist, std::move(w));
  return report;
}

namespace {

MetricComparison compare_metric(const MetricSummary& a, const MetricSummary& b) {
  MetricComparison out;
  out.metric = a.metric;
  std::map<std::pair<std::string, std::string>, double> baseline;
  for (const auto& s : b.scores) baseline[{s.cond, s.target}] = s.z;
  if (baseline.size() != a.scores.size()) fail(ErrorKind::validation, "reports cover different column pairs");
  double total = 0.0;
  for (const auto& s : a.scores) {
    auto it = baseline.find({s.cond, s.target});
    if (it == baseline.end())
      fail(ErrorKind::validation, "pair (" + s.cond + ", " + s.target + ") missing from the baseline report");
    PairDelta d{s.cond, s.target, s.z, it->second, s.z - it->second, 0};
    const double gain = higher_is_better(a.metric) ? d.delta : -d.delta;
    if (gain > kTieTolerance) {
      d.outcome = 1;
      ++out.improved;
    } else if (gain < -kTieTolerance) {
      d.outcome = -1;
      ++out.worsened;
    } else {
      ++out.unchanged;
    }
    if (out.pairs.empty()) out.max_delta = out.min_delta = d.delta;
    out.max_delta = std::max(out.max_delta, d.delta);
    out.min_delta = std::min(out.min_delta, d.delta);
    total += d.delta;
    out.pairs.push_back(std::move(d));
  }
  if (!out.pairs.empty()) out.mean_delta = total / static_cast<double>(out.pairs.size());
  return out;
}

}  // namespace

ReportComparison compare_reports(const FidelityReport& a, const FidelityReport& b) {
  return {compare_metric(a.ks, b.ks), compare_metric(a.w, b.w)};
}

std::string ablation_table(std::span<const ReportComparison> trials) {
  std::ostringstream out;
  out.precision(10);
  out << "metric,outcome,max,min,mean\n";
  if (trials.empty()) return out.str();
  for (Metric m : {Metric::ks_p, Metric::w_dist}) {
    for (int outcome : {1, -1, 0}) {
      std::vector<double> counts;
      for (const auto& t : trials) {
        const auto& c = m == Metric::ks_p ? t.ks : t.w;
        counts.push_back(static_cast<double>(outcome == 1 ? c.improved : outcome == -1 ? c.worsened : c.unchanged));
      }
      const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
      out << to_string(m) << ',' << (outcome == 1 ? "improved" : outcome == -1 ? "worsened" : "unchanged") << ','
          << *std::max_element(counts.begin(), counts.end()) << ',' << *std::min_element(counts.begin(), counts.end())
          << ',' << total / static_cast<double>(counts.size()) << '\n';
    }
  }
  return out.str();
}

namespace {

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  nlohmann::ordered_json j;
  j["metric"] = std::string(to_string(s.metric));
  j["orientation"] = higher_is_better(s.metric) ? "higher_is_better" : "lower_is_better";
  j["max"] = s.max;
  j["min"] = s.min;
  j["mean"] = s.mean;
  j["bin_edges"] = s.bin_edges;
  j["histogram"] = s.histogram;
  auto& scores = j["scores"] = nlohmann::ordered_json::array();
  for (const auto& p : s.scores) {
    nlohmann::ordered_json pj{{"cond", p.cond}, {"target", p.target}, {"z", p.z}};
    auto& details = pj["details"] = nlohmann::ordered_json::array();
    for (const auto& d : p.details)
      details.push_back({{"value", d.cond_value},
                         {"weight", d.weight},
                         {"similarity", d.similarity},
                         {"missing_in_synthetic", d.missing_in_synthetic}});
    scores.push_back(std::move(pj));
  }
  return j;
}

nlohmann::ordered_json comparison_json(const MetricComparison& c) {
  nlohmann::ordered_json j;
  j["metric"] = std::string(to_string(c.metric));
  j["improved"] = c.improved;
  j["worsened"] = c.worsened;
  j["unchanged"] = c.unchanged;
  j["max_delta"] = c.max_delta;
  j["min_delta"] = c.min_delta;
  j["mean_delta"] = c.mean_delta;
  return j;
}

}  // namespace

std::string to_json(const FidelityReport& report) {
  nlohmann::ordered_json j;
  j["pairs"] = report.pairs.size();
  j["ks_p"] = summary_json(report.ks);
  j["w_dist"] = summary_json(report.w);
  return j.dump(2);
}

std::string to_long_csv(const FidelityReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "cond,target,metric,z\n";
  for (const auto* s : {&report.ks, &report.w})
    for (const auto& p : s->scores)
      out << format_csv_record({p.cond, p.target, std::string(to_string(p.metric))}) << ',' << p.z << '\n';
  return out.str();
}

std::string to_histogram_csv(const FidelityReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "metric,bin_lo,bin_hi,count\n";
  for (const auto* s : {&report.ks, &report.w})
    for (std::size_t b = 0; b < s->histogram.size(); ++b)
      out << to_string(s->metric) << ',' << s->bin_edges[b] << ',' << s->bin_edges[b + 1] << ',' << s->histogram[b]
          << '\n';
  return out.str();
}

std::string to_json(const ReportComparison& comparison) {
  nlohmann::ordered_json j;
  j["ks_p"] = comparison_json(comparison.ks);
  j["w_dist"] = comparison_json(comparison.w);
  return j.dump(2);
}

std::string to_csv(const ReportComparison& comparison) {
  std::ostringstream out;
  out.precision(10);
  out << "metric,improved,worsened,unchanged,max_delta,min_delta,mean_delta\n";
  for (const auto* c : {&comparison.ks, &comparison.w})
    out << to_string(c->metric) << ',' << c->improved << ',' << c->worsened << ',' << c->unchanged << ','
        << c->max_delta << ',' << c->min_delta << ',' << c->mean_delta << '\n';
  return out.str();
}

}  // namespace greater
