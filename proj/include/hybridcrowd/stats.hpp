#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace hybridcrowd {

enum class TestMethod { exact, normal_approximation };
std::string_view to_string(TestMethod m);

/// Samples of combined size up to this bound get the exact permutation
/// distribution; larger ones the tie-corrected normal approximation.
inline constexpr std::size_t kExactTestLimit = 12;

/// Values closer than this are treated as tied (and differences this close
/// to zero as zero).
inline constexpr double kTieTolerance = 1e-12;

/// Midranks (1-based) of `values`; tied values share their average rank.
std::vector<double> midranks(std::span<const double> values);

struct MannWhitneyResult {
  double u = 0.0;        // min(U_x, U_y)
  double u_x = 0.0;      // #{x > y} + 0.5 #{x = y}
  double p_value = 1.0;  // two-sided
  TestMethod method = TestMethod::exact;
};

/// Two-sided Mann-Whitney U test. The p-value is P(|U - nm/2| >= |u - nm/2|)
/// under the permutation null. With |x| + |y| <= exact_limit it is computed
/// exactly from the midrank-sum distribution (ties included); otherwise from
/// the normal approximation with tie-corrected variance and a 0.5 continuity
/// correction. Throws EmptySample.
MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                                 std::size_t exact_limit = kExactTestLimit);

enum class ZeroMethod {
  discard,  // drop zero differences before ranking (classic Wilcoxon)
  pratt,    // rank with zeros included, then drop them
};

struct WilcoxonResult {
  double w = 0.0;         // min(W+, W-)
  double w_plus = 0.0;
  double p_value = 1.0;   // two-sided
  std::size_t n_nonzero = 0;
  TestMethod method = TestMethod::exact;
};

/// Two-sided Wilcoxon signed-rank test on paired differences. Exact sign-flip
/// distribution for up to exact_limit nonzero differences, normal
/// approximation (variance sum r^2 / 4, continuity corrected) otherwise.
/// Throws AllZero when no nonzero difference remains.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences,
                                    ZeroMethod zeros = ZeroMethod::discard,
                                    std::size_t exact_limit = kExactTestLimit);

/// Two-sided normal tail 2 * (1 - Phi(|z|)).
double two_sided_normal_p(double z);

}  // namespace hybridcrowd
