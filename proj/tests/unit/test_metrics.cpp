#include <doctest.h>

#include <cmath>
#include <vector>

#include "hybridcrowd/crowdsim.hpp"
#include "hybridcrowd/error.hpp"
#include "hybridcrowd/metrics.hpp"
#include "hybridcrowd/random.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace hybridcrowd;

namespace {

std::vector<std::size_t> cell(const Corpus& corpus, Status s, Sentiment se, Group g) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& h = corpus[i];
    if (h.status == s && h.sentiment == se && h.group == g) out.push_back(i);
  }
  return out;
}

std::vector<double> to_double(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("correctness convention") {
  CHECK(correctness(Status::genuine, 0.75) == 1.0);
  CHECK(correctness(Status::altered, 0.75) == 0.0);
  CHECK(correctness(Status::altered, 0.25) == 1.0);
  CHECK(correctness(Status::genuine, 0.5) == 0.5);
  CHECK(correctness(Status::altered, 0.5) == 0.5);
}

TEST_CASE("accuracy over subsets") {
  const Corpus corpus = generate_corpus(2, 1);
  const auto truth = support::truth_row(corpus);
  CHECK(accuracy(truth, corpus) == 1.0);
  const std::vector<double> half(corpus.size(), 0.5);
  CHECK(accuracy(half, corpus) == 0.5);
  const std::vector<double> ones(corpus.size(), 1.0);
  CHECK(accuracy(ones, corpus, SubsetSelector{.status = Status::genuine}) == 1.0);
  CHECK(accuracy(ones, corpus, SubsetSelector{.status = Status::altered}) == 0.0);
  CHECK(accuracy(ones, corpus) == 0.5);

  const std::vector<double> none(corpus.size(), kMissing);
  CHECK_THROWS_AS(accuracy(none, corpus), EmptySubset);

  const auto m = support::single_row(corpus, truth, "r");
  CHECK(accuracy(m, corpus, "r") == 1.0);
  CHECK_THROWS_AS(accuracy(m, corpus, "nobody"), UnknownResponder);
  CHECK_THROWS_AS(correctness_vector(m, corpus, "nobody"), UnknownResponder);
}

TEST_CASE("uniform-random responder sits at chance") {
  const Corpus corpus = generate_corpus(50, 3);
  Rng rng(9);
  double sum = 0.0;
  const int runs = 40;
  for (int r = 0; r < runs; ++r) {
    std::vector<double> row(corpus.size());
    for (auto& p : row) p = static_cast<double>(rng.below(5)) / 4.0;
    sum += accuracy(row, corpus);
  }
  CHECK(sum / runs == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("counterfactual bias arithmetic") {
  const Corpus corpus = generate_corpus(2, 5);
  std::vector<double> row(corpus.size(), kMissing);
  const auto g = cell(corpus, Status::genuine, Sentiment::positive, Group::old);
  const auto gp = cell(corpus, Status::genuine, Sentiment::positive, Group::young);
  REQUIRE(g.size() == 2);
  row[g[0]] = 0.75;
  row[g[1]] = 1.0;
  row[gp[0]] = 0.25;
  row[gp[1]] = 0.5;
  const auto r = counterfactual_bias(row, corpus, Status::genuine, Sentiment::positive,
                                     Group::old, Group::young);
  CHECK(r.delta == doctest::Approx(0.5));
  CHECK(r.p_value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(r.n_g == 2);
  const auto back = counterfactual_bias(row, corpus, Status::genuine, Sentiment::positive,
                                        Group::young, Group::old);
  CHECK(back.delta == -r.delta);

  CHECK_THROWS_AS(counterfactual_bias(row, corpus, Status::genuine, Sentiment::positive,
                                      Group::old, Group::man),
                  GroupMismatch);
  CHECK_THROWS_AS(counterfactual_bias(row, corpus, Status::altered, Sentiment::positive,
                                      Group::old, Group::young),
                  EmptySubset);
}

TEST_CASE("counterfactual bias antisymmetry on random rows") {
  const Corpus corpus = generate_corpus(4, 6);
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> row(corpus.size());
    for (auto& p : row) p = static_cast<double>(rng.below(5)) / 4.0;
    for (const auto c : kCategories) {
      const auto [a, b] = groups_of(c);
      for (const auto s : kStatuses) {
        for (const auto se : kSentiments) {
          const auto x = counterfactual_bias(row, corpus, s, se, a, b);
          const auto y = counterfactual_bias(row, corpus, s, se, b, a);
          CHECK(x.delta == -y.delta);
          CHECK(x.p_value == doctest::Approx(y.p_value));
        }
      }
    }
  }
}

TEST_CASE("framing effect") {
  const Corpus corpus = generate_corpus(2, 8);
  SUBCASE("consistent responder has zero framing") {
    Rng rng(1);
    std::vector<double> row(corpus.size());
    for (const auto& [i, j] : corpus.pairs()) {
      row[i] = static_cast<double>(rng.below(5)) / 4.0;
      row[j] = 1.0 - row[i];
    }
    for (const auto se : kSentiments) {
      for (const auto g : kGroups) {
        const auto r = framing_effect(row, corpus, se, g);
        CHECK(r.delta_f == 0.0);
        CHECK(r.p_value == 1.0);
      }
    }
  }
  SUBCASE("credulous responder") {
    const std::vector<double> ones(corpus.size(), 1.0);
    CHECK(framing_effect(ones, corpus, Sentiment::negative, Group::woman).delta_f == 1.0);
  }
  SUBCASE("two-pair arithmetic") {
    std::vector<double> row(corpus.size(), kMissing);
    std::vector<std::size_t> hs;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].sentiment == Sentiment::positive && corpus[i].group == Group::white) hs.push_back(i);
    }
    REQUIRE(hs.size() == 4);
    // Keep one genuine and one altered white headline; answer their partners.
    std::vector<std::size_t> pick;
    for (const auto i : hs) {
      if (pick.empty() || corpus[pick[0]].status != corpus[i].status) pick.push_back(i);
      if (pick.size() == 2) break;
    }
    row[pick[0]] = 0.75;
    row[corpus.partner_index(pick[0])] = 0.5;
    row[pick[1]] = 0.5;
    row[corpus.partner_index(pick[1])] = 0.5;
    const auto r = framing_effect(row, corpus, Sentiment::positive, Group::white);
    CHECK(r.delta_f == doctest::Approx(0.125));
    CHECK(r.n == 2);
  }
  SUBCASE("missing partner") {
    std::vector<double> row(corpus.size(), 0.5);
    const auto hs = cell(corpus, Status::genuine, Sentiment::positive, Group::man);
    row[corpus.partner_index(hs[0])] = kMissing;
    CHECK_THROWS_AS(framing_effect(row, corpus, Sentiment::positive, Group::man),
                    MissingPartnerResponse);
  }
  SUBCASE("nothing answered") {
    const std::vector<double> none(corpus.size(), kMissing);
    CHECK_THROWS_AS(framing_effect(none, corpus, Sentiment::positive, Group::man), EmptySubset);
  }
}

TEST_CASE("Q statistic examples") {
  const auto a = to_double({1, 1, 0, 0, 1});
  CHECK(q_statistic(a, a) == 1.0);
  const auto b = to_double({0, 0, 1, 1, 0});
  CHECK(q_statistic(a, b) == -1.0);
  ContingencyTable t;
  t.n11 = 4;
  t.n00 = 2;
  t.n10 = 1;
  t.n01 = 3;
  CHECK(q_statistic(t) == doctest::Approx(5.0 / 11.0));
  const auto all = to_double({1, 1, 1});
  CHECK_THROWS_AS(q_statistic(all, all), DegenerateTable);
}

TEST_CASE("contingency table skips half credit and missing") {
  const std::vector<double> a{1, 0.5, 0, kMissing, 1};
  const std::vector<double> b{1, 1, 0, 1, 0};
  const auto t = contingency_table(a, b);
  CHECK(t.n11 == 1);
  CHECK(t.n00 == 1);
  CHECK(t.n10 == 1);
  CHECK(t.n01 == 0);
}

TEST_CASE("Q matches the count oracle on random vectors") {
  Rng rng(77);
  for (int t = 0; t < 2000; ++t) {
    const auto n = 4 + rng.below(57);
    std::vector<int> a(n);
    std::vector<int> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.below(2));
      b[i] = static_cast<int>(rng.below(2));
    }
    const auto c = oracle::count_agreement(a, b);
    const long num = c.n11 * c.n00 - c.n10 * c.n01;
    const long den = c.n11 * c.n00 + c.n10 * c.n01;
    if (den == 0) {
      CHECK_THROWS_AS(q_statistic(to_double(a), to_double(b)), DegenerateTable);
    } else {
      const double q = q_statistic(to_double(a), to_double(b));
      CHECK(q == static_cast<double>(num) / static_cast<double>(den));
      CHECK(q == q_statistic(to_double(b), to_double(a)));
      CHECK(std::fabs(q) <= 1.0);
    }
  }
}

TEST_CASE("pairwise Q matrix and summary") {
  const Corpus corpus = generate_corpus(3, 2);
  const auto truth = support::truth_row(corpus);
  std::vector<double> flipped(truth);
  for (std::size_t i = 0; i < flipped.size(); i += 3) flipped[i] = 1.0 - flipped[i];
  std::vector<double> other(truth);
  for (std::size_t i = 1; i < other.size(); i += 4) other[i] = 1.0 - other[i];
  const auto m = support::matrix(corpus, {"a", "b", "c"}, {flipped, flipped, other});
  const auto q = pairwise_q(m, corpus);
  CHECK(q.at(0, 0) == 1.0);
  CHECK(q.at(0, 1) == 1.0);
  CHECK(q.at(0, 2) == q.at(2, 0));
  const auto all = summarize_q(q, [](std::size_t, std::size_t) { return true; });
  CHECK(all.pairs == 3);
  const auto first = summarize_q(q, [](std::size_t i, std::size_t j) { return i == 0 && j == 1; });
  CHECK(first.mean == 1.0);
  CHECK(first.stddev == 0.0);
}

TEST_CASE("significance bands") {
  CHECK(significance_band(0.005) == SignificanceBand::p001);
  CHECK(significance_band(0.01) == SignificanceBand::p005);
  CHECK(significance_band(0.049) == SignificanceBand::p005);
  CHECK(significance_band(0.05) == SignificanceBand::p010);
  CHECK(significance_band(0.0999) == SignificanceBand::p010);
  CHECK(significance_band(0.1) == SignificanceBand::ns);
  CHECK(significance_band(1.0) == SignificanceBand::ns);
  for (const auto b : {SignificanceBand::p001, SignificanceBand::p005, SignificanceBand::p010,
                       SignificanceBand::ns}) {
    CHECK(parse_significance_band(to_string(b)) == b);
  }
}
