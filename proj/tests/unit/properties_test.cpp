#include <gtest/gtest.h>

#include <set>

#include "generators.hpp"
#include "therasim/core/validate.hpp"
#include "therasim/datasets/datasets.hpp"
#include "therasim/datasets/footer.hpp"
#include "therasim/evaluation/judge.hpp"
#include "therasim/profiles/profiles.hpp"

using namespace therasim;
using namespace therasim::testing;

TEST(Property, RandomSessionsTerminateWithinTheCap) {
  std::mt19937_64 rng(101);
  for (int n = 0; n < 200; ++n) {
    auto s = random_session(rng, n);
    auto record = SessionDriver(s.profile, s.config, s.backends()).run();
    SCOPED_TRACE("session " + std::to_string(n));
    EXPECT_TRUE(validate_session(record, s.config.max_utterances).empty());
    ASSERT_LE(record.utterances.size(), s.config.max_utterances);
    EXPECT_EQ(record.termination.kind, s.expected_kind());
    EXPECT_EQ(record.utterances.size(), s.expected_length());
    for (std::size_t i = 0; i < record.utterances.size(); ++i) {
      EXPECT_EQ(record.utterances[i].role, i % 2 == 0 ? Role::Patient : Role::Therapist);
    }
    for (const auto& e : record.events) EXPECT_LT(e.injected_at_turn, record.utterances.size());
    if (!s.config.environment_enabled) EXPECT_TRUE(record.events.empty());
  }
}

TEST(Property, SameSeedSameSession) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 20; ++n) {
    auto s = random_session(rng, n);
    EXPECT_EQ(SessionDriver(s.profile, s.config, s.backends()).run(),
              SessionDriver(s.profile, s.config, s.backends()).run());
  }
}

TEST(Property, ScoreParsersNeverAdmitOutOfRangeValues) {
  std::mt19937_64 rng(7);
  std::vector<std::string> card_keys(ScoreCard::dimension_names().begin(), ScoreCard::dimension_names().end());
  std::vector<std::string> state_keys{"Motivation", "Confidence"};
  std::size_t accepted = 0;
  for (int i = 0; i < 3000; ++i) {
    auto reply = random_judge_reply(rng, card_keys);
    auto card = parse_score_card(reply);
    if (card.value) {
      ++accepted;
      for (double v : card.value->values()) EXPECT_TRUE(v >= 1.0 && v <= 5.0) << reply;
    } else {
      EXPECT_FALSE(card.error.empty());
    }
    auto state = parse_state_scores(random_judge_reply(rng, state_keys));
    if (state.value) {
      EXPECT_TRUE(in_score_range(state.value->motivation));
      EXPECT_TRUE(in_score_range(state.value->confidence));
    }
    auto choice = parse_pairwise_choice(random_choice_reply(rng));
    if (choice.value) EXPECT_TRUE(*choice.value == 1 || *choice.value == 2);
  }
  EXPECT_GT(accepted, 0u) << "the generator should produce some valid cards";
}

TEST(Property, FooterParsingNeverThrowsUnexpectedly) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 3000; ++i) {
    auto text = random_footer_text(rng);
    std::optional<FooterParse> parsed;
    ASSERT_NO_THROW(parsed = find_strategy_footer(text)) << text;
    ASSERT_NO_THROW(strip_strategy_footer(text)) << text;
    if (!parsed) {
      try {
        parse_strategy_footer(text);
        ADD_FAILURE() << "expected NoFooter for " << text;
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NoFooter);
      }
      continue;
    }
    std::set<StrategyRef> unique(parsed->strategies.begin(), parsed->strategies.end());
    EXPECT_EQ(unique.size(), parsed->strategies.size()) << text;
    EXPECT_LT(strip_strategy_footer(text).size(), text.size());
  }
}

TEST(Property, RankingRoundTripsAndPairsFollowTiers) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 2000; ++i) {
    std::size_t k = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
    auto ranking = random_ranking(rng, k);
    auto parsed = parse_ranking(ranking.reply, k);
    ASSERT_TRUE(parsed.value) << ranking.reply << ": " << parsed.error;
    auto tiers = parsed.value->tiers;
    for (auto& t : tiers) std::sort(t.begin(), t.end());
    ASSERT_EQ(tiers, ranking.tiers) << ranking.reply;

    CandidateSet set;
    set.id = "c";
    set.context = {Utterance{Role::Patient, "hi", 0, {}}};
    for (std::size_t c = 0; c < k; ++c) set.candidates.push_back("candidate " + std::to_string(c));
    auto top = tiers.front().size();
    auto bottom = tiers.back().size();
    auto pairs = pairs_from_ranking(set, *parsed.value);
    EXPECT_EQ(pairs.size(), tiers.size() < 2 ? 0 : top * bottom);
    auto rest = pairs_from_ranking(set, *parsed.value, PairPolicy::TopVsRest);
    EXPECT_EQ(rest.size(), tiers.size() < 2 ? 0 : top * (k - top));
    for (const auto& p : rest) EXPECT_NE(p.chosen, p.rejected);
  }
}

TEST(Property, RankingRejectsNonPermutations) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    std::size_t k = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
    auto ranking = random_ranking(rng, k);
    // Claiming one more candidate than was ranked leaves one missing.
    auto parsed = parse_ranking(ranking.reply, k + 1);
    ASSERT_FALSE(parsed.value);
    EXPECT_EQ(parsed.failure, Errc::IncompletePermutation);
  }
}

TEST(Property, RedactionIsIdempotent) {
  std::mt19937_64 rng(19);
  static const std::vector<std::string> parts{"call me at 555-123-4567", "mail x.y@z.org", "see https://a.b/c?d=1",
                                              "u/someone", "@handle", "plain words", "[EMAIL]", "2 beers", "\n"};
  for (int i = 0; i < 1000; ++i) {
    std::string text;
    for (int p = 0; p < 5; ++p) text += pick(rng, parts) + " ";
    auto once = redact_patterns(text);
    EXPECT_EQ(redact_patterns(once), once) << text;
  }
}
