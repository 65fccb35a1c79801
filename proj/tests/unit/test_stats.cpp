#include <doctest.h>

#include <vector>

#include "hybridcrowd/error.hpp"
#include "hybridcrowd/format.hpp"
#include "hybridcrowd/random.hpp"
#include "hybridcrowd/stats.hpp"
#include "oracles/oracles.hpp"

using namespace hybridcrowd;

namespace {

std::vector<double> grid_sample(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng.below(5)) / 4.0;
  return v;
}

}  // namespace

TEST_CASE("midranks average ties") {
  const std::vector<double> v{3, 1, 3, 2};
  CHECK(midranks(v) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("mann-whitney small known cases") {
  const std::vector<double> x{1, 2, 3};
  const std::vector<double> y{4, 5, 6};
  const auto r = mann_whitney_u(x, y);
  CHECK(r.u_x == 0.0);
  CHECK(r.method == TestMethod::exact);
  CHECK(r.p_value == doctest::Approx(0.1));

  const std::vector<double> same{0.5, 0.5};
  CHECK(mann_whitney_u(same, same).p_value == 1.0);
  CHECK_THROWS_AS(mann_whitney_u(std::vector<double>{}, x), EmptySample);
}

TEST_CASE("mann-whitney exact matches enumeration on random grid samples") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = 1 + rng.below(6);
    const auto m = 1 + rng.below(12 - n);
    const auto x = grid_sample(rng, n);
    const auto y = grid_sample(rng, m);
    const auto r = mann_whitney_u(x, y);
    CHECK(r.u_x == oracle::pairwise_u(x, y));
    CHECK(r.p_value == doctest::Approx(oracle::mann_whitney_p(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("mann-whitney normal approximation") {
  Rng rng(4);
  const auto x = grid_sample(rng, 30);
  const auto y = grid_sample(rng, 40);
  const auto r = mann_whitney_u(x, y);
  CHECK(r.method == TestMethod::normal_approximation);
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1.0);

  // Shifting every y far above x gives a tiny p.
  std::vector<double> hi(y);
  for (auto& v : hi) v += 10.0;
  CHECK(mann_whitney_u(x, hi).p_value < 1e-6);
  // Symmetry in the arguments.
  CHECK(mann_whitney_u(y, x).p_value == doctest::Approx(r.p_value));
}

TEST_CASE("wilcoxon exact matches sign-flip enumeration") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = 1 + rng.below(10);
    std::vector<double> d(n);
    for (auto& v : d) v = static_cast<double>(rng.below(9)) / 4.0 - 1.0;
    bool any = false;
    for (const double v : d) any = any || v != 0.0;
    if (!any) {
      CHECK_THROWS_AS(wilcoxon_signed_rank(d), AllZero);
      continue;
    }
    const auto r = wilcoxon_signed_rank(d);
    CHECK(r.p_value == doctest::Approx(oracle::wilcoxon_p(d)).epsilon(1e-12));
  }
}

TEST_CASE("wilcoxon known values and approximation") {
  const std::vector<double> d{1, 2, 3, 4, 5};
  const auto r = wilcoxon_signed_rank(d);
  CHECK(r.w_plus == 15.0);
  CHECK(r.w == 0.0);
  CHECK(r.p_value == doctest::Approx(0.0625));

  std::vector<double> many;
  for (int i = 1; i <= 30; ++i) many.push_back(i % 3 == 0 ? -i : i);
  const auto big = wilcoxon_signed_rank(many);
  CHECK(big.method == TestMethod::normal_approximation);
  CHECK(big.n_nonzero == 30);

  const std::vector<double> with_zero{0, 1, 2, -3};
  CHECK(wilcoxon_signed_rank(with_zero, ZeroMethod::discard).n_nonzero == 3);
  CHECK(wilcoxon_signed_rank(with_zero, ZeroMethod::pratt).n_nonzero == 3);
}

TEST_CASE("normal tail") {
  CHECK(two_sided_normal_p(0.0) == doctest::Approx(1.0));
  CHECK(two_sided_normal_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(two_sided_normal_p(-1.959963984540054) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("rng is reproducible and derive_seed separates tags") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, std::uint64_t{2}) != derive_seed(2, std::uint64_t{1}));
  Rng c(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.below(7) < 7);
  }
}

TEST_CASE("number formatting") {
  CHECK(format_fixed(0.1234567, 6) == "0.123457");
  CHECK(format_fixed(-0.0000001, 6) == "0.000000");
  CHECK(format_real(0.1) == "0.1");
  CHECK(round_to(0.1234567) == doctest::Approx(0.123457));
}
