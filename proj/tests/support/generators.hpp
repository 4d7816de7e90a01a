#pragma once

// Random inputs for property tests and the acceptance binary. Everything is
// driven by an explicit mt19937_64 so failures reproduce from the seed.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "fakes.hpp"
#include "therasim/core/catalog.hpp"

namespace therasim::testing {

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

inline bool coin(std::mt19937_64& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

struct RandomSession {
  PatientProfile profile;
  SessionConfig config;
  std::optional<int> farewell_at;
  JudgeScores scores;

  // The termination the fakes must produce: the exchange that answers the
  // first farewell resolves the session when the judge agrees and it fits
  // under the cap.
  Termination::Kind expected_kind() const {
    bool judge_ok = !config.judge_enabled ||
                    (scores.motivation >= config.resolution_threshold && scores.confidence >= config.resolution_threshold);
    if (farewell_at && judge_ok && static_cast<std::size_t>(2 * *farewell_at) <= config.max_utterances) {
      return Termination::Kind::Resolved;
    }
    return Termination::Kind::MaxTurns;
  }
  std::size_t expected_length() const {
    return expected_kind() == Termination::Kind::Resolved ? static_cast<std::size_t>(2 * *farewell_at)
                                                          : config.max_utterances;
  }
  SessionBackends backends() const { return fake_backends(farewell_at, scores); }
};

inline RandomSession random_session(std::mt19937_64& rng, int n) {
  RandomSession s;
  s.profile = make_profile(n, kAllDifficulties[static_cast<std::size_t>(n) % 3]);
  s.config.max_utterances = 2 * std::uniform_int_distribution<std::size_t>(1, kMaxUtterances / 2)(rng);
  s.config.event_period_k = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
  s.config.event_probability = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  s.config.environment_enabled = coin(rng, 0.7);
  s.config.judge_enabled = coin(rng, 0.8);
  s.config.seed = rng();
  if (coin(rng, 0.8)) s.farewell_at = std::uniform_int_distribution<int>(1, 35)(rng);
  static const std::vector<double> scores{3.0, 3.5, 3.9, 4.0, 4.5, 5.0};
  s.scores = {pick(rng, scores), pick(rng, scores)};
  return s;
}

// Judge replies assembled from plausible and hostile fragments.
inline std::string random_judge_reply(std::mt19937_64& rng, const std::vector<std::string>& keys) {
  static const std::vector<std::string> values{"1",   "5",     "3.5", "4.25", "0",    "-2",    "5.01", "6",
                                               "0.99", "\"4\"", "\"x\"", "null", "true", "1e308", "[3]",  "{}",
                                               "\"4.5/5\"", "2.", "NaN", "Infinity", "\"\""};
  static const std::vector<std::string> wrappers{"", "Here you go: ", "```json\n", "Scores:\n"};
  if (coin(rng, 0.2)) {
    // Well-formed: every key with an in-range value.
    Json valid = Json::object();
    for (const auto& k : keys) valid[k] = std::uniform_int_distribution<int>(2, 10)(rng) / 2.0;
    return valid.dump();
  }
  std::string body = "{";
  std::size_t n = std::uniform_int_distribution<std::size_t>(0, keys.size() + 1)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) body += coin(rng, 0.95) ? ", " : " ";
    std::string key = coin(rng, 0.9) ? pick(rng, keys) : std::string("Extra");
    body += "\"" + key + "\": " + pick(rng, values);
  }
  if (coin(rng, 0.9)) body += "}";
  std::string reply = pick(rng, wrappers) + body;
  if (coin(rng, 0.1)) reply = reply.substr(0, reply.size() / 2);
  if (coin(rng, 0.05)) reply = pick(rng, values);
  return reply;
}

inline std::string random_choice_reply(std::mt19937_64& rng) {
  static const std::vector<std::string> replies{"1", "2", " 2\n", "1.", "Therapist 1", "3", "", "12", "0", "two", "2 "};
  return pick(rng, replies);
}

// A random ranking of k candidates as tiers, and its judge-style rendering
// with ties as nested arrays and mixed label forms.
struct RandomRanking {
  std::vector<std::vector<std::size_t>> tiers;
  std::string reply;
};

inline RandomRanking random_ranking(std::mt19937_64& rng, std::size_t k) {
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  RandomRanking r;
  for (std::size_t i = 0; i < k; ++i) {
    if (r.tiers.empty() || coin(rng, 0.6)) r.tiers.emplace_back();
    r.tiers.back().push_back(order[i]);
  }
  auto label = [&](std::size_t idx) -> Json {
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
      case 0: return "response_" + std::to_string(idx + 1);
      case 1: return "Response " + std::to_string(idx + 1);
      default: return std::to_string(idx + 1);
    }
  };
  Json ranked = Json::array();
  for (const auto& tier : r.tiers) {
    if (tier.size() == 1) {
      ranked.push_back(label(tier[0]));
    } else {
      Json group = Json::array();
      for (auto idx : tier) group.push_back(label(idx));
      ranked.push_back(group);
    }
  }
  for (auto& tier : r.tiers) std::sort(tier.begin(), tier.end());
  r.reply = Json{{"Ranked Responses", ranked}, {"Rationale", "random"}}.dump();
  return r;
}

// Footer-ish text: prose lines and "Strategies" lines mixing catalog names,
// abbreviations, noise and separators.
inline std::string random_footer_text(std::mt19937_64& rng) {
  static const std::vector<std::string> heads{"**Strategies:** ", "**strategies:**", "  **STRATEGIES**: ", "Strategies: ",
                                              "**Strategies:", "", "Therapist: "};
  static const std::vector<std::string> items{
      "MI", "CBT", "SFBT", "Motivational Interviewing", "Mindfulness-Based Interventions (MBI)", "etc.", "...",
      "and so on", "Peer Support Programs", "Harm Reduction", "Strategy 3", "(", ")", "", "  ", "Unknown Thing",
      "Relapse Prevention", "Coping Skill Development", "Behavioral Activation (BA)", "and more", "\xE2\x80\xA6"};
  static const std::vector<std::string> seps{", ", ";", " , ", ",,", " and "};
  std::string text;
  std::size_t lines = std::uniform_int_distribution<std::size_t>(0, 4)(rng);
  for (std::size_t l = 0; l < lines; ++l) {
    text += pick(rng, heads);
    std::size_t n = std::uniform_int_distribution<std::size_t>(0, 6)(rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (i) text += pick(rng, seps);
      text += pick(rng, items);
    }
    text += coin(rng, 0.8) ? "\n" : "\r\n";
  }
  return text;
}

}  // namespace therasim::testing
