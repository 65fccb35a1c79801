#include "hybridcrowd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "hybridcrowd/error.hpp"

namespace hybridcrowd {

std::string_view to_string(TestMethod m) {
  return m == TestMethod::exact ? "exact" : "normal_approximation";
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] - values[order[i]] <= kTieTolerance) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double two_sided_normal_p(double z) { return std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0))); }

namespace {

// Ranks doubled so that midranks become integers.
std::vector<std::int64_t> doubled(const std::vector<double>& ranks) {
  std::vector<std::int64_t> out(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) out[i] = std::llround(2.0 * ranks[i]);
  return out;
}

// Sum over tie groups of (t^3 - t).
double tie_term(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double term = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] - sorted[i] <= kTieTolerance) ++j;
    const double t = static_cast<double>(j - i);
    term += t * t * t - t;
    i = j;
  }
  return term;
}

double continuity_z(double deviation, double variance) {
  if (variance <= 0.0) return 0.0;
  return std::max(std::fabs(deviation) - 0.5, 0.0) / std::sqrt(variance);
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                 std::size_t exact_limit) {
  if (x.empty() || y.empty()) throw EmptySample("Mann-Whitney U needs two non-empty samples");
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  const std::size_t total = n + m;

  std::vector<double> combined(x.begin(), x.end());
  combined.insert(combined.end(), y.begin(), y.end());
  const auto ranks2 = doubled(midranks(combined));

  std::int64_t rank_sum2 = 0;
  for (std::size_t i = 0; i < n; ++i) rank_sum2 += ranks2[i];
  const auto nn = static_cast<std::int64_t>(n);
  const auto nm = static_cast<std::int64_t>(n * m);
  const std::int64_t u2 = rank_sum2 - nn * (nn + 1);  // 2 * U_x

  MannWhitneyResult result;
  result.u_x = static_cast<double>(u2) / 2.0;
  result.u = std::min(result.u_x, static_cast<double>(nm) - result.u_x);

  if (total <= exact_limit) {
    // counts[k][s]: subsets of size k whose doubled rank sum is s.
    const auto max_sum = static_cast<std::size_t>(std::accumulate(ranks2.begin(), ranks2.end(), std::int64_t{0}));
    std::vector<std::vector<std::uint64_t>> counts(n + 1, std::vector<std::uint64_t>(max_sum + 1, 0));
    counts[0][0] = 1;
    for (std::size_t item = 0; item < total; ++item) {
      const auto r = static_cast<std::size_t>(ranks2[item]);
      for (std::size_t k = std::min(n, item + 1); k >= 1; --k) {
        for (std::size_t s = max_sum; s >= r; --s) counts[k][s] += counts[k - 1][s - r];
      }
    }
    const std::int64_t observed = std::llabs(u2 - nm);
    std::uint64_t extreme = 0;
    std::uint64_t all = 0;
    for (std::size_t s = 0; s <= max_sum; ++s) {
      if (counts[n][s] == 0) continue;
      all += counts[n][s];
      const std::int64_t dev = std::llabs(static_cast<std::int64_t>(s) - nn * (nn + 1) - nm);
      if (dev >= observed) extreme += counts[n][s];
    }
    result.p_value = static_cast<double>(extreme) / static_cast<double>(all);
    result.method = TestMethod::exact;
    return result;
  }

  const double N = static_cast<double>(total);
  const double variance = static_cast<double>(nm) / 12.0 *
                          ((N + 1.0) - tie_term(combined) / (N * (N - 1.0)));
  const double z = continuity_z(result.u_x - static_cast<double>(nm) / 2.0, variance);
  result.p_value = variance <= 0.0 ? 1.0 : two_sided_normal_p(z);
  result.method = TestMethod::normal_approximation;
  return result;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences, ZeroMethod zeros,
                                    std::size_t exact_limit) {
  std::vector<double> magnitudes;
  std::vector<bool> positive;
  std::vector<double> ranks;
  if (zeros == ZeroMethod::discard) {
    for (const double d : differences) {
      if (std::fabs(d) <= kTieTolerance) continue;
      magnitudes.push_back(std::fabs(d));
      positive.push_back(d > 0.0);
    }
    ranks = midranks(magnitudes);
  } else {
    std::vector<double> all;
    for (const double d : differences) all.push_back(std::fabs(d) <= kTieTolerance ? 0.0 : std::fabs(d));
    const auto all_ranks = midranks(all);
    for (std::size_t i = 0; i < differences.size(); ++i) {
      if (all[i] == 0.0) continue;
      magnitudes.push_back(all[i]);
      positive.push_back(differences[i] > 0.0);
      ranks.push_back(all_ranks[i]);
    }
  }
  const std::size_t n = magnitudes.size();
  if (n == 0) throw AllZero("all differences are zero");

  const auto ranks2 = doubled(ranks);
  const std::int64_t total2 = std::accumulate(ranks2.begin(), ranks2.end(), std::int64_t{0});
  std::int64_t plus2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (positive[i]) plus2 += ranks2[i];
  }

  WilcoxonResult result;
  result.n_nonzero = n;
  result.w_plus = static_cast<double>(plus2) / 2.0;
  result.w = std::min(result.w_plus, static_cast<double>(total2) / 2.0 - result.w_plus);

  if (n <= exact_limit) {
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(total2) + 1, 0);
    counts[0] = 1;
    for (const auto r : ranks2) {
      for (auto s = static_cast<std::size_t>(total2); s >= static_cast<std::size_t>(r); --s) {
        counts[s] += counts[s - static_cast<std::size_t>(r)];
      }
    }
    const std::int64_t observed = std::llabs(2 * plus2 - total2);
    std::uint64_t extreme = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (std::llabs(2 * static_cast<std::int64_t>(s) - total2) >= observed) extreme += counts[s];
    }
    result.p_value = static_cast<double>(extreme) / std::ldexp(1.0, static_cast<int>(n));
    result.method = TestMethod::exact;
    return result;
  }

  double variance = 0.0;
  for (const double r : ranks) variance += r * r;
  variance /= 4.0;
  const double z = continuity_z(result.w_plus - static_cast<double>(total2) / 4.0, variance);
  result.p_value = variance <= 0.0 ? 1.0 : two_sided_normal_p(z);
  result.method = TestMethod::normal_approximation;
  return result;
}

}  // namespace hybridcrowd
