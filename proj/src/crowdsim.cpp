#include "hybridcrowd/crowdsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hybridcrowd/error.hpp"
#include "hybridcrowd/metrics.hpp"
#include "hybridcrowd/random.hpp"

namespace hybridcrowd {

SyntheticResponderSpec specialist(std::string id, Category expertise, double high, double low) {
  SyntheticResponderSpec spec;
  spec.id = std::move(id);
  spec.base_accuracy = low;
  for (const auto s : kStatuses) {
    for (const auto sentiment : kSentiments) {
      for (const auto g : groups_of(expertise)) {
        spec.per_cell_accuracy[CellKey{expertise, s, sentiment, g}] = high;
      }
    }
  }
  return spec;
}

double base_accuracy_for(double metric_accuracy, double hesitation_rate) {
  if (hesitation_rate >= 1.0) throw InvalidArgument("hesitation rate must be below 1");
  return std::clamp((metric_accuracy - 0.5 * hesitation_rate) / (1.0 - hesitation_rate), 0.0, 1.0);
}

Corpus generate_corpus(std::size_t pairs_per_cell, std::uint64_t seed) {
  if (pairs_per_cell == 0) throw InvalidArgument("pairs_per_cell must be at least 1");
  std::vector<Headline> headlines;
  headlines.reserve(pairs_per_cell * 24);
  char serial[24];
  for (const auto c : kCategories) {
    for (const auto sentiment : kSentiments) {
      for (const auto g : groups_of(c)) {
        for (std::size_t k = 0; k < pairs_per_cell; ++k) {
          std::snprintf(serial, sizeof serial, "%04zu", k);
          const std::string stem = std::string(to_string(c)) + "-" +
                                   std::string(to_string(sentiment)) + "-" +
                                   std::string(to_string(g)) + "-" + serial;
          const std::string tag = std::string(to_string(g)) + "-" + serial;
          Headline genuine{stem + "-g",
                           "Synthetic " + std::string(to_string(sentiment)) + " headline " + tag +
                               " about " + std::string(to_string(g)) + " people",
                           c, g, sentiment, Status::genuine, stem + "-a"};
          Headline altered{stem + "-a",
                           "Synthetic " + std::string(to_string(sentiment)) + " headline " + tag +
                               " about " + std::string(to_string(complement(g))) + " people",
                           c, complement(g), sentiment, Status::altered, stem + "-g"};
          headlines.push_back(std::move(genuine));
          headlines.push_back(std::move(altered));
        }
      }
    }
  }
  Rng rng(derive_seed(seed, "corpus"));
  rng.shuffle(headlines);
  return Corpus::create(std::move(headlines), "synthetic pairs_per_cell=" +
                                                  std::to_string(pairs_per_cell) +
                                                  " seed=" + std::to_string(seed));
}

double effective_accuracy(const SyntheticResponderSpec& spec, const Headline& h) {
  double a = spec.base_accuracy;
  if (auto it = spec.per_cell_accuracy.find(CellKey{h.category, h.status, h.sentiment, h.group});
      it != spec.per_cell_accuracy.end()) {
    a = it->second;
  }

  // Shift of the mean likelihood, converted to accuracy units: each unit of
  // accuracy moves the mean by 0.75 (1 - hesitation) toward the truth.
  double mean_shift = 0.0;
  if (auto it = spec.bias_shift.find(h.category); it != spec.bias_shift.end()) {
    const double half = it->second / 2.0;
    const bool privileged = h.group == privileged_group(h.category);
    const bool positive = h.sentiment == Sentiment::positive;
    mean_shift += (privileged == positive) ? half : -half;
  }
  if (auto it = spec.framing_shift.find({h.category, h.sentiment}); it != spec.framing_shift.end()) {
    mean_shift += it->second / 2.0;
  }
  const double slope = 0.75 * (1.0 - spec.hesitation_rate);
  if (mean_shift != 0.0 && slope > 0.0) {
    a += (h.status == Status::genuine ? 1.0 : -1.0) * mean_shift / slope;
  }
  return std::clamp(a, 0.0, 1.0);
}

ResponseMatrix simulate_responses(const CrowdSpec& crowd, const Corpus& corpus,
                                  std::uint64_t seed) {
  for (const auto& m : crowd.members) {
    if (m.correlation_rho < 0.0 || m.correlation_rho > 1.0) {
      throw InvalidArgument("correlation_rho of '" + m.id + "' is outside [0, 1]");
    }
    if (m.hesitation_rate < 0.0 || m.hesitation_rate > 1.0) {
      throw InvalidArgument("hesitation_rate of '" + m.id + "' is outside [0, 1]");
    }
  }
  const std::size_t n = corpus.size();
  std::vector<double> shared(n);
  Rng shared_rng(derive_seed(derive_seed(seed, "shared"), crowd.shared_noise_seed));
  for (auto& u : shared) u = shared_rng.uniform();

  ResponseMatrixBuilder builder(corpus, LikelihoodScale::likert);
  for (const auto& m : crowd.members) {
    const std::size_t row = builder.add_responder(m.id);
    Rng rng(derive_seed(derive_seed(seed, "member"), m.id));
    for (std::size_t h = 0; h < n; ++h) {
      // Four draws per cell keep the streams aligned across parameter values.
      const double u_mix = rng.uniform();
      const double u_own = rng.uniform();
      const double u_hesitate = rng.uniform();
      const double u_level = rng.uniform();
      const Headline& headline = corpus[h];
      if (u_hesitate < m.hesitation_rate) {
        builder.set(row, h, 0.5);
        continue;
      }
      const double u = u_mix < m.correlation_rho ? shared[h] : u_own;
      const bool correct = u < effective_accuracy(m, headline);
      const bool says_genuine = correct == (headline.status == Status::genuine);
      const bool extreme = u_level < 0.5;
      builder.set(row, h, says_genuine ? (extreme ? 1.0 : 0.75) : (extreme ? 0.0 : 0.25));
    }
  }
  return std::move(builder).build();
}

std::vector<ResponderProfile> crowd_profiles(const CrowdSpec& crowd) {
  std::vector<ResponderProfile> out;
  out.reserve(crowd.members.size());
  for (const auto& m : crowd.members) out.push_back(ResponderProfile{m.id, m.kind, std::nullopt});
  return out;
}

double mean_pairwise_q(const ResponseMatrix& responses, const Corpus& corpus) {
  return summarize_q(pairwise_q(responses, corpus), [](std::size_t, std::size_t) { return true; }).mean;
}

namespace {

double simulated_q(const SyntheticResponderSpec& member, double rho, const Corpus& corpus,
                   std::uint64_t seed) {
  CrowdSpec crowd;
  for (int i = 0; i < 4; ++i) {
    SyntheticResponderSpec copy = member;
    copy.id = "m" + std::to_string(i);
    copy.correlation_rho = rho;
    crowd.members.push_back(std::move(copy));
  }
  double sum = 0.0;
  int count = 0;
  for (int s = 0; s < kCalibrationSeeds; ++s) {
    const double q = mean_pairwise_q(
        simulate_responses(crowd, corpus, derive_seed(seed, static_cast<std::uint64_t>(s))), corpus);
    if (is_missing(q)) continue;
    sum += q;
    ++count;
  }
  if (count == 0) throw Unachievable("every simulated crowd had a degenerate Q table");
  return sum / count;
}

}  // namespace

CalibrationResult calibrate_correlation(double target_q, const SyntheticResponderSpec& member,
                                        std::size_t pairs_per_cell, std::uint64_t seed) {
  if (!(target_q >= -1.0 && target_q <= 1.0)) throw InvalidArgument("target Q must lie in [-1, 1]");
  const Corpus corpus = generate_corpus(pairs_per_cell, derive_seed(seed, "calibration"));

  const double q0 = simulated_q(member, 0.0, corpus, seed);
  if (target_q < q0 - kCalibrationTolerance) {
    throw Unachievable("target Q " + std::to_string(target_q) + " is below the rho=0 baseline " +
                       std::to_string(q0));
  }
  if (std::fabs(target_q - q0) <= kCalibrationTolerance && target_q <= q0) return {0.0, q0};
  const double q1 = simulated_q(member, 1.0, corpus, seed);
  if (target_q >= q1) return {1.0, q1};

  double lo = 0.0;
  double hi = 1.0;
  CalibrationResult best{0.0, q0};
  for (int it = 0; it < 30 && hi - lo > 1e-6; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double q = simulated_q(member, mid, corpus, seed);
    if (std::fabs(q - target_q) < std::fabs(best.achieved_q - target_q)) best = {mid, q};
    if (std::fabs(q - target_q) <= 1e-3) break;
    (q < target_q ? lo : hi) = mid;
  }
  if (std::fabs(best.achieved_q - target_q) > kCalibrationTolerance) {
    throw Unachievable("closest achievable Q is " + std::to_string(best.achieved_q));
  }
  return best;
}

}  // namespace hybridcrowd
