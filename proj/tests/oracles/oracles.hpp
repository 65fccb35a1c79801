// Independent brute-force reference implementations used by the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

// Midrank of values[i] by direct counting.
inline double count_rank(std::span<const double> values, std::size_t i) {
  double less = 0.0;
  double equal = 0.0;
  for (const double v : values) {
    if (v < values[i]) less += 1.0;
    else if (v == values[i]) equal += 1.0;
  }
  return less + (equal + 1.0) / 2.0;
}

inline double pairwise_u(std::span<const double> x, std::span<const double> y) {
  double u = 0.0;
  for (const double a : x) {
    for (const double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return u;
}

// Two-sided Mann-Whitney p-value by enumerating every relabelling of the
// pooled sample.
inline double mann_whitney_p(std::span<const double> x, std::span<const double> y) {
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const std::size_t n = x.size();
  const std::size_t total = pooled.size();
  const double center = static_cast<double>(n * y.size());
  const double observed = std::fabs(2.0 * pairwise_u(x, y) - center);
  std::uint64_t hits = 0;
  std::uint64_t all = 0;
  for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t i = 0; i < total; ++i) ((mask >> i) & 1u ? a : b).push_back(pooled[i]);
    ++all;
    if (std::fabs(2.0 * pairwise_u(a, b) - center) >= observed - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(all);
}

// Two-sided Wilcoxon signed-rank p-value (zeros discarded) by flipping
// every sign.
inline double wilcoxon_p(std::span<const double> d) {
  std::vector<double> nz;
  for (const double v : d) {
    if (v != 0.0) nz.push_back(v);
  }
  std::vector<double> mags;
  for (const double v : nz) mags.push_back(std::fabs(v));
  std::vector<double> ranks;
  double rank_total = 0.0;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    ranks.push_back(count_rank(mags, i));
    rank_total += ranks.back();
  }
  double w_plus = 0.0;
  for (std::size_t i = 0; i < nz.size(); ++i) {
    if (nz[i] > 0) w_plus += ranks[i];
  }
  const double observed = std::fabs(2.0 * w_plus - rank_total);
  std::uint64_t hits = 0;
  const std::uint32_t flips = 1u << nz.size();
  for (std::uint32_t mask = 0; mask < flips; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < nz.size(); ++i) {
      if ((mask >> i) & 1u) w += ranks[i];
    }
    if (std::fabs(2.0 * w - rank_total) >= observed - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(flips);
}

struct Counts {
  long n11 = 0, n10 = 0, n01 = 0, n00 = 0;
};

inline Counts count_agreement(const std::vector<int>& a, const std::vector<int>& b) {
  Counts c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.n11 += a[i] && b[i];
    c.n10 += a[i] && !b[i];
    c.n01 += !a[i] && b[i];
    c.n00 += !a[i] && !b[i];
  }
  return c;
}

// Minimizer of the ridge least-squares objective over the simplex by plain
// (non-accelerated) projected gradient with a conservative step; sort-free
// bisection projection.
inline std::vector<double> bisection_project(std::vector<double> v) {
  double lo = *std::min_element(v.begin(), v.end()) - 1.0;
  double hi = *std::max_element(v.begin(), v.end());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double s = 0.0;
    for (const double x : v) s += std::max(0.0, x - mid);
    (s > 1.0 ? lo : hi) = mid;
  }
  const double tau = 0.5 * (lo + hi);
  for (auto& x : v) x = std::max(0.0, x - tau);
  return v;
}

inline double ridge_objective(const std::vector<std::vector<double>>& rows,
                              const std::vector<double>& y, const std::vector<double>& w,
                              double ridge) {
  double sse = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double p = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) p += rows[r][j] * w[j];
    sse += (p - y[r]) * (p - y[r]);
  }
  double reg = 0.0;
  for (const double x : w) reg += (x - 1.0 / static_cast<double>(w.size())) * (x - 1.0 / static_cast<double>(w.size()));
  return sse / static_cast<double>(rows.size()) + ridge * reg;
}

inline std::vector<double> projected_gradient(const std::vector<std::vector<double>>& rows,
                                              const std::vector<double>& y, double ridge,
                                              int iterations = 200000) {
  const std::size_t d = rows.front().size();
  double frob = 0.0;
  for (const auto& r : rows) {
    for (const double x : r) frob += x * x;
  }
  const double step = 1.0 / (2.0 * (frob / static_cast<double>(rows.size()) + ridge) + 1e-12);
  std::vector<double> w(d, 1.0 / static_cast<double>(d));
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> g(d, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double p = 0.0;
      for (std::size_t j = 0; j < d; ++j) p += rows[r][j] * w[j];
      for (std::size_t j = 0; j < d; ++j) g[j] += 2.0 * (p - y[r]) * rows[r][j] / static_cast<double>(rows.size());
    }
    for (std::size_t j = 0; j < d; ++j) g[j] += 2.0 * ridge * (w[j] - 1.0 / static_cast<double>(d));
    std::vector<double> next(d);
    for (std::size_t j = 0; j < d; ++j) next[j] = w[j] - step * g[j];
    next = bisection_project(next);
    double change = 0.0;
    for (std::size_t j = 0; j < d; ++j) change = std::max(change, std::fabs(next[j] - w[j]));
    w = next;
    if (change < 1e-13) break;
  }
  return w;
}

}  // namespace oracle
