#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../support/oracles.hpp"
#include "../support/planted.hpp"
#include "greater/error.hpp"
#include "greater/fidelity.hpp"
#include "greater/random.hpp"

using namespace greater;

namespace {

CategoricalDistribution dist(std::vector<std::string> samples) {
  return CategoricalDistribution::from_samples(samples);
}

std::vector<double> as_numbers(const std::vector<std::string>& s) {
  std::vector<double> out;
  for (const auto& v : s) out.push_back(std::stod(v));
  return out;
}

std::vector<std::string> random_samples(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(rng.index(k)));
  return out;
}

// x drives y and z; noise replaces each cell with a uniform draw at that rate.
Table latent_table(std::uint64_t seed, std::size_t n, double noise) {
  Rng rng(seed);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = rng.index(3);
    auto cell = [&](std::uint64_t v) { return std::to_string(rng.unit() < noise ? rng.index(3) : v); };
    rows.push_back({planted::subject_name(i), std::to_string(x), cell(x), cell((x + 1) % 3)});
  }
  return planted::make({"x", "y", "z"}, rows);
}

MetricSummary summary_of(Metric m, std::vector<double> z) {
  MetricSummary s;
  s.metric = m;
  for (std::size_t i = 0; i < z.size(); ++i) s.scores.push_back({"c" + std::to_string(i), "t", m, z[i], {}});
  return s;
}

}  // namespace

TEST_CASE("distributions") {
  auto d = dist({"b", "a", "b"});
  CHECK(d.support == std::vector<std::string>{"a", "b"});
  CHECK(d.probabilities[1] == doctest::Approx(2.0 / 3));
  CHECK(d.sample_size == 3);
  CHECK(dist({"10", "9", "100"}).support == std::vector<std::string>{"9", "10", "100"});
  const std::vector<std::string> support{"a", "b", "c"}, samples{"a"}, outside{"q"};
  auto fixed = CategoricalDistribution::from_samples(samples, support);
  CHECK(fixed.probabilities == std::vector<double>{1, 0, 0});
  CHECK_THROWS_AS(CategoricalDistribution::from_samples(outside, support), Error);
  CategoricalDistribution bad{{"a", "a"}, {0.5, 0.5}, 2};
  CHECK_THROWS_AS(bad.validate(), Error);
  CategoricalDistribution unnormalized{{"a"}, {0.5}, 2};
  CHECK_THROWS_AS(unnormalized.validate(), Error);
  auto [x, y] = align(dist({"a"}), dist({"c"}));
  CHECK(x.support == y.support);
  CHECK(y.probabilities == std::vector<double>{0, 1});
}

TEST_CASE("conditional distribution") {
  auto t = planted::make({"c", "t"}, {{"s1", "A", "x"}, {"s2", "A", "y"}, {"s3", "A", "y"}, {"s4", "B", "x"}});
  auto d = conditional_dist(t, "t", "c", "A");
  CHECK(d.support == std::vector<std::string>{"x", "y"});
  CHECK(d.probabilities[0] == doctest::Approx(1.0 / 3));
  CHECK(d.probabilities[1] == doctest::Approx(2.0 / 3));
  CHECK(d.sample_size == 3);
  CHECK(conditional_dist(t, "t", "c", "B").probabilities == std::vector<double>{1.0});
  CHECK_THROWS_AS(conditional_dist(t, "t", "c", "Z"), Error);
}

TEST_CASE("KS statistic and p-value on hand cases") {
  CHECK(ks_statistic(dist({"1", "2", "3"}), dist({"2", "3", "4"})) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(ks_statistic(dist({"a", "b"}), dist({"b", "a"})) == 0.0);
  CHECK(ks_p(dist({"a", "b"}), dist({"b", "a"})) == 1.0);
  CHECK(ks_statistic(dist({"a"}), dist({"b"})) == 1.0);
  CHECK(ks_p(dist(std::vector<std::string>(50, "a")), dist(std::vector<std::string>(50, "b"))) < 1e-10);
  const double lambda = std::sqrt(3.0 * 3.0 / 6.0) / 3.0;
  CHECK(ks_p(dist({"1", "2", "3"}), dist({"2", "3", "4"})) == doctest::Approx(oracle::kolmogorov_q(lambda)));
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(10.0) < 1e-80);
}

TEST_CASE("Kolmogorov survival function matches the series") {
  for (double lambda = 0.2; lambda < 4.0; lambda += 0.01)
    REQUIRE(std::abs(kolmogorov_sf(lambda) - oracle::kolmogorov_q(lambda)) < 1e-10);
  for (double lambda = 0.0; lambda < 3.0; lambda += 0.05) REQUIRE(kolmogorov_sf(lambda) >= kolmogorov_sf(lambda + 0.05));
}

TEST_CASE("Wasserstein distance on hand cases") {
  CHECK(w_dist(dist({"a", "b"}), dist({"a", "b"})) == 0.0);
  CHECK(w_dist(dist({"0"}), dist({"1"})) == 1.0);
  CHECK(w_dist(dist({"0", "1"}), dist({"0"})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w_dist(dist({"0"}), dist({"7"})) == 1.0);  // unit spacing between ranks
  CHECK(w_dist(dist({"a"}), dist({"c", "b", "c"})) == doctest::Approx(1.0 + 2.0 / 3));
}

TEST_CASE("property: KS and W match the counting oracles, symmetry, triangle inequality") {
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const auto k = 1 + rng.index(6);
    auto a = random_samples(rng, 1 + rng.index(30), k), b = random_samples(rng, 1 + rng.index(30), k),
         c = random_samples(rng, 1 + rng.index(30), k);
    auto da = dist(a), db = dist(b), dc = dist(c);
    REQUIRE(std::abs(ks_statistic(da, db) - oracle::ks_d(as_numbers(a), as_numbers(b))) < 1e-12);
    REQUIRE(std::abs(w_dist(da, db) - oracle::w_rank(as_numbers(a), as_numbers(b))) < 1e-12);
    REQUIRE(ks_p(da, db) == ks_p(db, da));
    REQUIRE(w_dist(da, db) == doctest::Approx(w_dist(db, da)));

    // triangle inequality on the fixed support 0..k-1
    std::vector<std::string> support;
    for (std::size_t v = 0; v < k; ++v) support.push_back(std::to_string(v));
    support = dist(support).support;
    auto fa = CategoricalDistribution::from_samples(a, support), fb = CategoricalDistribution::from_samples(b, support),
         fc = CategoricalDistribution::from_samples(c, support);
    REQUIRE(w_dist(fa, fc) <= w_dist(fa, fb) + w_dist(fb, fc) + 1e-12);
  }
}

TEST_CASE("cross-feature score: fixed point, missing condition, single condition") {
  auto orig = latent_table(1, 200, 0.2);
  for (auto m : {Metric::ks_p, Metric::w_dist}) {
    auto s = cross_feature_score(orig, orig, "x", "y", m);
    CHECK(s.z == (m == Metric::ks_p ? 1.0 : 0.0));
    CHECK(std::abs(s.recompute() - s.z) < 1e-12);
  }

  std::vector<Row> rows, syn_rows;
  for (int i = 0; i < 10; ++i) rows.push_back({planted::subject_name(i), i < 8 ? "A" : "B", std::to_string(i % 2)});
  for (int i = 0; i < 8; ++i) syn_rows.push_back(rows[static_cast<std::size_t>(i)]);
  auto o = planted::make({"c", "t"}, rows), syn = planted::make({"c", "t"}, syn_rows);
  auto s = cross_feature_score(o, syn, "c", "t", Metric::ks_p);
  CHECK(s.z <= 0.8 + 1e-12);
  REQUIRE(s.details.size() == 2);
  CHECK(s.details[1].missing_in_synthetic);
  CHECK(s.details[1].weight == doctest::Approx(0.2));
  auto w = cross_feature_score(o, syn, "c", "t", Metric::w_dist);
  CHECK(w.z == doctest::Approx(0.2 * 1.0));  // two target labels: W = K - 1 = 1

  auto single = planted::make({"c", "t"}, {{"a", "A", "0"}, {"b", "A", "1"}});
  auto other = planted::make({"c", "t"}, {{"a", "A", "0"}, {"b", "A", "0"}});
  auto one = cross_feature_score(single, other, "c", "t", Metric::w_dist);
  CHECK(one.z == doctest::Approx(w_dist(dist({"0", "1"}), dist({"0", "0"}))));
  CHECK_THROWS_AS(cross_feature_score(single, planted::make({"c", "q"}, {}), "c", "t", Metric::ks_p), Error);
}

TEST_CASE("cross-feature score is invariant under row permutation") {
  auto orig = latent_table(2, 150, 0.3), syn = latent_table(3, 150, 0.5);
  std::vector<std::size_t> idx(syn.num_rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(4);
  rng.shuffle(idx);
  auto shuffled = take_rows(syn, idx);
  for (auto m : {Metric::ks_p, Metric::w_dist})
    CHECK(cross_feature_score(orig, syn, "y", "z", m).z ==
          doctest::Approx(cross_feature_score(orig, shuffled, "y", "z", m).z).epsilon(1e-12));
}

TEST_CASE("rare conditions can be pooled") {
  std::vector<Row> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({planted::subject_name(i), i < 18 ? "A" : std::to_string(i), "0"});
  auto t = planted::make({"c", "t"}, rows);
  auto pooled = cross_feature_score(t, t, "c", "t", Metric::ks_p, {5});
  CHECK(pooled.details.size() == 2);
  CHECK(cross_feature_score(t, t, "c", "t", Metric::ks_p).details.size() == 3);
}

TEST_CASE("fidelity report: pair count, fixed point histogram, noise ordering") {
  auto orig = latent_table(5, 300, 0.1);
  CHECK(all_ordered_pairs(orig).size() == 6);
  const std::vector<std::string> two{"x", "z"};
  CHECK(all_ordered_pairs(orig, two).size() == 2);
  const std::vector<std::string> unknown{"x", "nope"};
  CHECK_THROWS_AS(all_ordered_pairs(orig, unknown), Error);

  auto self = fidelity_report(orig, orig);
  CHECK(self.ks.scores.size() == 6);
  CHECK(self.ks.histogram.back() == 6);
  CHECK(self.w.histogram.front() == 6);
  CHECK(self.ks.mean == 1.0);
  CHECK(self.w.max == 0.0);

  auto clean = fidelity_report(orig, latent_table(6, 300, 0.1));
  auto noisy = fidelity_report(orig, latent_table(7, 300, 0.6));
  CHECK(noisy.ks.mean < clean.ks.mean);
  CHECK(noisy.w.mean > clean.w.mean);
  CHECK(std::accumulate(noisy.w.histogram.begin(), noisy.w.histogram.end(), std::size_t{0}) == 6);
  CHECK(noisy.w.bin_edges.back() == doctest::Approx(noisy.w.max));

  CHECK(to_long_csv(self).find("cond,target,metric,z\n") == 0);
  CHECK(to_histogram_csv(self).find("metric,bin_lo,bin_hi,count\n") == 0);
  CHECK(to_json(self).find("lower_is_better") != std::string::npos);
}

TEST_CASE("report comparison and ablation table") {
  FidelityReport a, b;
  a.ks = summary_of(Metric::ks_p, {0.5, 0.6, 0.7, 0.8});
  a.w = summary_of(Metric::w_dist, {0.5, 0.6, 0.7, 0.8});
  auto same = compare_reports(a, a);
  CHECK(same.ks.unchanged == 4);
  CHECK(same.w.unchanged == 4);

  b.ks = summary_of(Metric::ks_p, {0.4, 0.5, 0.6, 0.7});
  b.w = summary_of(Metric::w_dist, {0.6, 0.7, 0.8, 0.9});
  auto dom = compare_reports(a, b);
  CHECK(dom.ks.improved == 4);
  CHECK(dom.w.improved == 4);  // lower W is better
  CHECK(dom.ks.mean_delta == doctest::Approx(0.1));

  FidelityReport half;
  half.ks = summary_of(Metric::ks_p, {0.6, 0.7, 0.6, 0.7});
  half.w = summary_of(Metric::w_dist, {0.4, 0.5, 0.8, 0.9});
  auto h = compare_reports(half, a);
  CHECK(h.ks.improved == 2);
  CHECK(h.ks.worsened == 2);
  CHECK(h.w.improved == 2);
  CHECK(h.w.worsened == 2);
  CHECK(h.ks.improved + h.ks.worsened + h.ks.unchanged == 4);

  FidelityReport fewer;
  fewer.ks = summary_of(Metric::ks_p, {0.1});
  fewer.w = summary_of(Metric::w_dist, {0.1});
  CHECK_THROWS_AS(compare_reports(a, fewer), Error);

  const std::vector<ReportComparison> trials{same, dom, h};
  const auto csv = ablation_table(trials);
  CHECK(csv.find("metric,outcome,max,min,mean\n") == 0);
  CHECK(csv.find("ks_p,improved,4,0,2\n") != std::string::npos);
  CHECK(to_csv(h).find("improved") != std::string::npos);
}
