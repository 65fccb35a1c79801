#include "hybridcrowd/metrics.hpp"

#include "hybridcrowd/error.hpp"

namespace hybridcrowd {

namespace {

void check_row(std::span<const double> likelihoods, const Corpus& corpus) {
  if (likelihoods.size() != corpus.size()) {
    throw InvalidArgument("likelihood row has " + std::to_string(likelihoods.size()) +
                          " entries, corpus has " + std::to_string(corpus.size()));
  }
}

std::span<const double> responder_row(const ResponseMatrix& responses, const Corpus& corpus,
                                      std::string_view responder) {
  responses.check_aligned(corpus);
  return responses.row(responder);
}

}  // namespace

double correctness(Status truth, double likelihood) {
  if (likelihood == 0.5) return 0.5;
  const bool says_genuine = likelihood > 0.5;
  return says_genuine == (truth == Status::genuine) ? 1.0 : 0.0;
}

std::vector<double> correctness_vector(std::span<const double> likelihoods, const Corpus& corpus) {
  check_row(likelihoods, corpus);
  std::vector<double> out(corpus.size(), kMissing);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!is_missing(likelihoods[i])) out[i] = correctness(corpus[i].status, likelihoods[i]);
  }
  return out;
}

std::vector<double> correctness_vector(const ResponseMatrix& responses, const Corpus& corpus,
                                       std::string_view responder) {
  return correctness_vector(responder_row(responses, corpus, responder), corpus);
}

double accuracy(std::span<const double> likelihoods, const Corpus& corpus,
                const SubsetSelector& selector) {
  check_row(likelihoods, corpus);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (is_missing(likelihoods[i]) || !selector.matches(corpus[i])) continue;
    sum += correctness(corpus[i].status, likelihoods[i]);
    ++count;
  }
  if (count == 0) throw EmptySubset("no answered headline matches the selector");
  return sum / static_cast<double>(count);
}

double accuracy(const ResponseMatrix& responses, const Corpus& corpus, std::string_view responder,
                const SubsetSelector& selector) {
  return accuracy(responder_row(responses, corpus, responder), corpus, selector);
}

BiasResult counterfactual_bias(std::span<const double> likelihoods, const Corpus& corpus,
                               Status status, Sentiment sentiment, Group g, Group g_prime) {
  check_row(likelihoods, corpus);
  if (complement(g) != g_prime) {
    throw GroupMismatch(std::string(to_string(g)) + " and " + std::string(to_string(g_prime)) +
                        " are not complementary groups");
  }
  std::vector<double> sample_g;
  std::vector<double> sample_g_prime;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Headline& h = corpus[i];
    if (is_missing(likelihoods[i]) || h.status != status || h.sentiment != sentiment) continue;
    if (h.group == g) sample_g.push_back(likelihoods[i]);
    if (h.group == g_prime) sample_g_prime.push_back(likelihoods[i]);
  }
  if (sample_g.empty() || sample_g_prime.empty()) {
    throw EmptySubset("counterfactual bias needs answers for both " + std::string(to_string(g)) +
                      " and " + std::string(to_string(g_prime)));
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  BiasResult result;
  result.delta = mean(sample_g) - mean(sample_g_prime);
  result.n_g = sample_g.size();
  result.n_g_prime = sample_g_prime.size();
  const auto test = mann_whitney_u(sample_g, sample_g_prime);
  result.p_value = test.p_value;
  result.method = test.method;
  return result;
}

BiasResult counterfactual_bias(const ResponseMatrix& responses, const Corpus& corpus,
                               std::string_view responder, Status status, Sentiment sentiment,
                               Group g, Group g_prime) {
  return counterfactual_bias(responder_row(responses, corpus, responder), corpus, status,
                             sentiment, g, g_prime);
}

FramingResult framing_effect(std::span<const double> likelihoods, const Corpus& corpus,
                             Sentiment sentiment, Group g, ZeroMethod zeros) {
  check_row(likelihoods, corpus);
  std::vector<double> differences;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Headline& h = corpus[i];
    if (h.sentiment != sentiment || h.group != g || is_missing(likelihoods[i])) continue;
    const double partner = likelihoods[corpus.partner_index(i)];
    if (is_missing(partner)) {
      throw MissingPartnerResponse("headline '" + h.id + "' was answered but its partner '" +
                                   h.partner_id + "' was not");
    }
    differences.push_back(likelihoods[i] - (1.0 - partner));
  }
  if (differences.empty()) throw EmptySubset("no answered headline in the framing subset");
  FramingResult result;
  result.n = differences.size();
  double sum = 0.0;
  for (const double d : differences) sum += d;
  result.delta_f = sum / static_cast<double>(differences.size());
  try {
    const auto test = wilcoxon_signed_rank(differences, zeros);
    result.p_value = test.p_value;
    result.method = test.method;
  } catch (const AllZero&) {
    result.p_value = 1.0;
    result.method = TestMethod::exact;
  }
  return result;
}

FramingResult framing_effect(const ResponseMatrix& responses, const Corpus& corpus,
                             std::string_view responder, Sentiment sentiment, Group g,
                             ZeroMethod zeros) {
  return framing_effect(responder_row(responses, corpus, responder), corpus, sentiment, g, zeros);
}

ContingencyTable contingency_table(std::span<const double> correct_a,
                                   std::span<const double> correct_b) {
  if (correct_a.size() != correct_b.size()) {
    throw InvalidArgument("correctness vectors differ in length");
  }
  ContingencyTable t;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    const double a = correct_a[i];
    const double b = correct_b[i];
    const bool a_binary = a == 0.0 || a == 1.0;
    const bool b_binary = b == 0.0 || b == 1.0;
    if (!a_binary || !b_binary) continue;
    if (a == 1.0 && b == 1.0) ++t.n11;
    else if (a == 0.0 && b == 0.0) ++t.n00;
    else if (a == 1.0) ++t.n10;
    else ++t.n01;
  }
  return t;
}

double q_statistic(const ContingencyTable& t) {
  const auto agree = static_cast<double>(t.n11) * static_cast<double>(t.n00);
  const auto disagree = static_cast<double>(t.n10) * static_cast<double>(t.n01);
  const double denominator = agree + disagree;
  if (denominator == 0.0) {
    throw DegenerateTable("Q-statistic undefined: N11*N00 + N10*N01 = 0");
  }
  return (agree - disagree) / denominator;
}

double q_statistic(std::span<const double> correct_a, std::span<const double> correct_b) {
  return q_statistic(contingency_table(correct_a, correct_b));
}

QMatrix pairwise_q(const ResponseMatrix& responses, const Corpus& corpus) {
  responses.check_aligned(corpus);
  const std::size_t n = responses.responder_count();
  std::vector<std::vector<double>> correct;
  correct.reserve(n);
  for (std::size_t r = 0; r < n; ++r) correct.push_back(correctness_vector(responses.row(r), corpus));
  QMatrix q;
  q.responder_ids = responses.responder_ids();
  q.values.assign(n * n, kMissing);
  for (std::size_t i = 0; i < n; ++i) {
    q.values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = kMissing;
      try {
        v = q_statistic(correct[i], correct[j]);
      } catch (const DegenerateTable&) {
      }
      q.values[i * n + j] = v;
      q.values[j * n + i] = v;
    }
  }
  return q;
}

SignificanceBand significance_band(double p_value) {
  if (p_value < 0.01) return SignificanceBand::p001;
  if (p_value < 0.05) return SignificanceBand::p005;
  if (p_value < 0.1) return SignificanceBand::p010;
  return SignificanceBand::ns;
}

std::string_view to_string(SignificanceBand b) {
  switch (b) {
    case SignificanceBand::p001: return "p<0.01";
    case SignificanceBand::p005: return "p<0.05";
    case SignificanceBand::p010: return "p<0.1";
    case SignificanceBand::ns: return "ns";
  }
  return "ns";
}

std::optional<SignificanceBand> parse_significance_band(std::string_view text) {
  for (const auto b : {SignificanceBand::p001, SignificanceBand::p005, SignificanceBand::p010,
                       SignificanceBand::ns}) {
    if (to_string(b) == text) return b;
  }
  return std::nullopt;
}

}  // namespace hybridcrowd
