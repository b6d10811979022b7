#pragma once

// Independent reference computations used to check the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracle {

// Pearson chi-square by summing (O - E)^2 / E over every cell with E > 0.
inline double chi2_direct(const std::vector<std::vector<double>>& obs) {
  const std::size_t r = obs.size(), c = r ? obs[0].size() : 0;
  std::vector<double> rs(r, 0.0), cs(c, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      rs[i] += obs[i][j];
      cs[j] += obs[i][j];
      n += obs[i][j];
    }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double e = rs[i] * cs[j] / n;
      if (e > 0.0) chi2 += (obs[i][j] - e) * (obs[i][j] - e) / e;
    }
  return chi2;
}

inline double cramers_v(const std::vector<std::vector<double>>& obs) {
  const std::size_t r = obs.size(), c = r ? obs[0].size() : 0;
  double n = 0.0;
  std::size_t nr = 0, nc = 0;
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += obs[i][j];
    nr += s > 0.0;
    n += s;
  }
  for (std::size_t j = 0; j < c; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < r; ++i) s += obs[i][j];
    nc += s > 0.0;
  }
  const auto k = std::min(nr, nc);
  if (n < 2.0 || k < 2) return 0.0;
  return std::min(1.0, std::sqrt(chi2_direct(obs) / (n * static_cast<double>(k - 1))));
}

// Empirical CDF at x by counting.
inline double ecdf(const std::vector<double>& s, double x) {
  return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; })) /
         static_cast<double>(s.size());
}

inline std::vector<double> merged_support(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> s = a;
  s.insert(s.end(), b.begin(), b.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

inline double ks_d(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (double x : merged_support(a, b)) d = std::max(d, std::abs(ecdf(a, x) - ecdf(b, x)));
  return d;
}

// Wasserstein-1 with labels placed at their rank in the merged support.
inline double w_rank(const std::vector<double>& a, const std::vector<double>& b) {
  const auto s = merged_support(a, b);
  double w = 0.0;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) w += std::abs(ecdf(a, s[k]) - ecdf(b, s[k]));
  return w;
}

// Kolmogorov survival function by its alternating series.
inline double kolmogorov_q(double lambda) {
  double q = 0.0;
  for (int k = 1; k <= 200; ++k) q += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace oracle
