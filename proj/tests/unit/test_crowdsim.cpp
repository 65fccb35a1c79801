#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "hybridcrowd/crowdsim.hpp"
#include "hybridcrowd/error.hpp"
#include "hybridcrowd/metrics.hpp"

using namespace hybridcrowd;

namespace {

CrowdSpec copies(const SyntheticResponderSpec& spec, int n, std::uint64_t noise = 0) {
  CrowdSpec crowd;
  crowd.shared_noise_seed = noise;
  for (int i = 0; i < n; ++i) {
    auto s = spec;
    s.id = "m" + std::to_string(i);
    crowd.members.push_back(s);
  }
  return crowd;
}

}  // namespace

TEST_CASE("generated corpus shape") {
  const Corpus c = generate_corpus(1, 0);
  CHECK(c.size() == 24);
  std::map<std::tuple<Category, Status, Sentiment, Group>, int> cells;
  for (const auto& h : c.headlines()) ++cells[{h.category, h.status, h.sentiment, h.group}];
  CHECK(cells.size() == 24);
  for (const auto& [k, n] : cells) CHECK(n == 1);
  CHECK(c.warnings().empty());

  const Corpus a = generate_corpus(3, 5);
  const Corpus b = generate_corpus(3, 5);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(generate_corpus(3, 6).fingerprint() != a.fingerprint());
  CHECK_THROWS_AS(generate_corpus(0, 1), InvalidArgument);

  const Corpus big = generate_corpus(2, 1);
  for (std::size_t i = 0; i < big.size(); ++i) {
    CHECK(big.partner_index(big.partner_index(i)) == i);
  }
}

TEST_CASE("perfect member") {
  const Corpus corpus = generate_corpus(5, 1);
  SyntheticResponderSpec s;
  s.id = "p";
  s.base_accuracy = 1.0;
  s.hesitation_rate = 0.0;
  CrowdSpec crowd{{s}, 0};
  const auto m = simulate_responses(crowd, corpus, 3);
  CHECK(accuracy(m, corpus, "p") == 1.0);
}

TEST_CASE("likelihoods stay on the grid") {
  const Corpus corpus = generate_corpus(5, 2);
  SyntheticResponderSpec s;
  s.bias_shift[Category::age] = 0.3;
  s.framing_shift[{Category::gender, Sentiment::negative}] = -0.2;
  const auto m = simulate_responses(copies(s, 4), corpus, 8);
  for (std::size_t r = 0; r < m.responder_count(); ++r) {
    for (const double p : m.row(r)) CHECK(on_likert_grid(p));
  }
}

TEST_CASE("full correlation makes identical members agree") {
  const Corpus corpus = generate_corpus(10, 4);
  SyntheticResponderSpec s;
  s.base_accuracy = 0.6;
  s.correlation_rho = 1.0;
  s.hesitation_rate = 0.0;
  const auto m = simulate_responses(copies(s, 2), corpus, 12);
  CHECK(q_statistic(correctness_vector(m, corpus, "m0"), correctness_vector(m, corpus, "m1")) == 1.0);
}

TEST_CASE("simulation is deterministic and member streams are independent of crowd size") {
  const Corpus corpus = generate_corpus(3, 4);
  SyntheticResponderSpec s;
  const auto a = simulate_responses(copies(s, 3), corpus, 7);
  const auto b = simulate_responses(copies(s, 3), corpus, 7);
  const auto c = simulate_responses(copies(s, 2), corpus, 7);
  for (std::size_t h = 0; h < corpus.size(); ++h) {
    CHECK(a.at(2, h) == b.at(2, h));
    CHECK(a.at(1, h) == c.at(1, h));
  }
  SyntheticResponderSpec bad;
  bad.correlation_rho = 1.5;
  CHECK_THROWS_AS(simulate_responses(copies(bad, 1), corpus, 1), InvalidArgument);
}

TEST_CASE("specialist accuracy") {
  const auto s = specialist("x", Category::gender, 0.95, 0.5);
  Headline h{"id", "t", Category::gender, Group::woman, Sentiment::negative, Status::altered, "p"};
  CHECK(effective_accuracy(s, h) == 0.95);
  h.category = Category::age;
  h.group = Group::old;
  CHECK(effective_accuracy(s, h) == 0.5);
}

TEST_CASE("base accuracy for a target metric") {
  CHECK(base_accuracy_for(0.7, 0.0) == doctest::Approx(0.7));
  CHECK(base_accuracy_for(0.61, 0.1) == doctest::Approx((0.61 - 0.05) / 0.9));
  CHECK_THROWS_AS(base_accuracy_for(0.6, 1.0), InvalidArgument);
  // The accuracy metric credits hesitation with 0.5.
  const Corpus corpus = generate_corpus(100, 1);
  SyntheticResponderSpec s;
  s.hesitation_rate = 0.2;
  s.base_accuracy = base_accuracy_for(0.65, 0.2);
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = simulate_responses(copies(s, 1), corpus, seed);
    sum += accuracy(m, corpus, "m0");
  }
  CHECK(sum / 5 == doctest::Approx(0.65).epsilon(0.02));
}

TEST_CASE("planted bias is recovered in expectation") {
  const Corpus corpus = generate_corpus(200, 3);
  SyntheticResponderSpec s;
  s.id = "b";
  s.correlation_rho = 0.0;
  s.bias_shift[Category::ethnicity] = 0.2;
  const int runs = 8;
  double pos = 0.0;
  double neg = 0.0;
  double age = 0.0;
  for (int seed = 0; seed < runs; ++seed) {
    const auto m = simulate_responses(CrowdSpec{{s}, 0}, corpus, 11 + seed);
    pos += counterfactual_bias(m, corpus, "b", Status::genuine, Sentiment::positive, Group::white,
                               Group::african_american).delta / runs;
    neg += counterfactual_bias(m, corpus, "b", Status::altered, Sentiment::negative, Group::white,
                               Group::african_american).delta / runs;
    age += counterfactual_bias(m, corpus, "b", Status::genuine, Sentiment::positive, Group::old,
                               Group::young).delta / runs;
  }
  CHECK(std::fabs(pos - 0.2) <= 0.06);
  CHECK(std::fabs(neg + 0.2) <= 0.06);
  CHECK(std::fabs(age) <= 0.06);
}

TEST_CASE("mean pairwise Q rises with rho") {
  const Corpus corpus = generate_corpus(20, 5);
  SyntheticResponderSpec s;
  s.base_accuracy = 0.65;
  double previous = -2.0;
  for (const double rho : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    s.correlation_rho = rho;
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) sum += mean_pairwise_q(simulate_responses(copies(s, 4), corpus, seed), corpus);
    const double q = sum / 20;
    CHECK(q >= previous - 0.02);
    previous = q;
  }
}

TEST_CASE("calibration") {
  SyntheticResponderSpec s;
  s.base_accuracy = base_accuracy_for(0.65, 0.1);
  SUBCASE("Q = 1 needs full correlation") {
    CHECK(calibrate_correlation(1.0, s, 10, 1).rho == 1.0);
  }
  SUBCASE("reachable target") {
    const auto r = calibrate_correlation(0.85, s, 10, 1);
    CHECK(r.achieved_q >= 0.83);
    CHECK(r.achieved_q <= 0.87);
    CHECK(r.rho > 0.0);
    CHECK(r.rho < 1.0);
  }
  SUBCASE("below the independent baseline") {
    CHECK_THROWS_AS(calibrate_correlation(-0.5, s, 10, 1), Unachievable);
  }
}
