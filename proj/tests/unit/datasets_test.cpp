#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "fakes.hpp"
#include "therasim/datasets/datasets.hpp"

using namespace therasim;
using namespace therasim::testing;

namespace {

Json load_fixture(const std::string& name) {
  std::ifstream in(std::string(THERASIM_FIXTURE_DIR) + "/" + name);
  return Json::parse(in);
}

std::string transcript(std::size_t utterances, std::string footer = "**Strategies:** MI, CBT") {
  std::string text = "Here is the dialogue.\n\n";
  for (std::size_t i = 0; i < utterances; ++i) {
    text += i % 2 == 0 ? "**Patient:** " : "**Therapist:** ";
    text += "line " + std::to_string(i) + "\n";
  }
  if (!footer.empty()) text += "\n" + footer + "\n";
  return text;
}

std::vector<Utterance> context_of(std::size_t n) {
  std::vector<Utterance> c;
  for (std::size_t i = 0; i < n; ++i) {
    c.push_back(Utterance{i % 2 == 0 ? Role::Patient : Role::Therapist, "c" + std::to_string(i), i, {}});
  }
  return c;
}

CandidateSet set_of(std::size_t k) {
  CandidateSet s;
  s.id = "c-test";
  s.context = context_of(3);
  for (std::size_t i = 0; i < k; ++i) s.candidates.push_back("candidate " + std::to_string(i));
  return s;
}

using PairKey = std::pair<std::string, std::string>;

std::multiset<PairKey> keys(const std::vector<PreferencePair>& pairs) {
  std::multiset<PairKey> out;
  for (const auto& p : pairs) out.emplace(p.chosen, p.rejected);
  return out;
}

AnnotationRecord annotation(Preferred p, std::optional<std::string> rewrite = {}) {
  AnnotationRecord r;
  r.id = "a-1";
  r.context = context_of(1);
  r.response_a = "A";
  r.response_b = "B";
  r.preferred = p;
  r.rationale = "clearer";
  r.reference_rewrite = std::move(rewrite);
  return r;
}

}  // namespace

TEST(Footer, FiftyVariantFixture) {
  auto fixture = load_fixture("footer_variants.json").at("variants");
  ASSERT_EQ(fixture.size(), 50u);
  for (const auto& v : fixture) {
    auto text = v.at("text").get<std::string>();
    SCOPED_TRACE("variant " + std::to_string(v.at("id").get<int>()) + ": " + text);
    auto parse = find_strategy_footer(text);
    if (v.value("no_footer", false)) {
      EXPECT_FALSE(parse);
      continue;
    }
    ASSERT_TRUE(parse);
    std::vector<std::string> got;
    for (const auto& s : parse->strategies) got.push_back(s.key());
    EXPECT_EQ(got, v.at("strategies").get<std::vector<std::string>>());
    EXPECT_EQ(parse->warnings.size(), v.at("warnings").get<std::size_t>());
  }
}

TEST(Footer, StripRemovesOnlyTheFooterLine) {
  EXPECT_EQ(strip_strategy_footer("Hello there.\n\n**Strategies:** MI\n"), "Hello there.");
  EXPECT_EQ(strip_strategy_footer("No footer.  "), "No footer.");
  auto parse = parse_strategy_footer("a\n**Strategies:** Actionable Strategy 4");
  EXPECT_TRUE(parse.lists_actionable);
  EXPECT_EQ(parse.line_index, 1u);
  try {
    parse_strategy_footer("Strategies: MI");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoFooter);
  }
}

TEST(Sft, ParsesTaggedTranscript) {
  auto u = parse_sft_transcript(
      "Intro text\nPatient: I use daily.\nit helps me sleep\n\n**Doctor:** What else?\n**Strategies:** MI\n"
      "Patient: ignored after footer");
  ASSERT_EQ(u.size(), 2u);
  EXPECT_EQ(u[0].text, "I use daily. it helps me sleep");
  EXPECT_EQ(u[1].role, Role::Therapist);
  EXPECT_EQ(u[1].index, 1u);
}

TEST(Sft, AssessmentRejectsEachFailureKind) {
  auto reason = [](const SftOutcome& o) { return std::get<SftRejection>(o).reason; };
  EXPECT_TRUE(std::holds_alternative<SftDialogue>(assess_sft_transcript("p", transcript(50))));
  EXPECT_EQ(reason(assess_sft_transcript("p", transcript(49))), RejectReason::TooShort);
  EXPECT_EQ(reason(assess_sft_transcript("p", transcript(50, ""))), RejectReason::NoFooter);
  EXPECT_EQ(reason(assess_sft_transcript("p", transcript(50, "**Strategies:** etc."))), RejectReason::EmptyFooter);
  auto therapist_first = transcript(50);
  therapist_first.replace(therapist_first.find("**Patient:**"), 12, "**Therapist:**");
  EXPECT_EQ(reason(assess_sft_transcript("p", therapist_first)), RejectReason::NotPatientFirst);
  auto doubled = transcript(50);
  doubled.replace(doubled.find("**Therapist:** line 1"), 14, "**Patient:**");
  EXPECT_EQ(reason(assess_sft_transcript("p", doubled)), RejectReason::AlternationBroken);
}

TEST(Sft, PromptAndGeneration) {
  auto profile = make_profile(1);
  StrategyCounts usage{{StrategyRef::framework(Framework::SFBT), 2}};
  auto prompt = render_sft_prompt(profile, usage);
  EXPECT_TRUE(contains(prompt, "daily cannabis"));
  EXPECT_TRUE(contains(prompt, "Solution-Focused Brief Therapy (SFBT): 2 times used."));
  EXPECT_TRUE(contains(prompt, "Ensure the dialogue meets the following requirements"));

  auto good = build_sft_dialogue(profile, usage, ModelEndpoint{ScriptedBackend::replay({transcript(52)}), "g", 0.7});
  ASSERT_TRUE(std::holds_alternative<SftDialogue>(good));
  EXPECT_EQ(std::get<SftDialogue>(good).footer_strategies.size(), 2u);
  auto bad = build_sft_dialogue(profile, usage, ModelEndpoint{ScriptedBackend::replay({transcript(10)}), "g", 0.7});
  EXPECT_TRUE(std::holds_alternative<SftRejection>(bad));
}

TEST(Candidates, RegeneratesDuplicatesAndDropsStubbornOnes) {
  auto therapist = ModelEndpoint{ScriptedBackend::replay({"one\n**Strategies:** MI", "one", "two", "two", "two", "two",
                                                          "two", "three"}),
                                 "t", 0.7};
  auto set = generate_candidates(context_of(3), 4, therapist);
  EXPECT_EQ(set.candidates, (std::vector<std::string>{"one", "two", "three"}));
  EXPECT_EQ(set.warnings.size(), 1u);
  EXPECT_EQ(set.id.substr(0, 2), "c-");

  auto same = ModelEndpoint{ScriptedBackend::replay(std::vector<std::string>(20, "same")), "t", 0.7};
  try {
    generate_candidates(context_of(3), 3, same);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooFewDistinct);
  }
  EXPECT_THROW(generate_candidates(context_of(2), 2, same), Error);
}

TEST(Ranking, ParsesLabelsTiesAndRejectsIncompletePermutations) {
  auto ok = parse_ranking(R"({"Ranked Responses": ["response_2", ["Response 1", 4], "3"], "Rationale": "r"})", 4);
  ASSERT_TRUE(ok.value);
  EXPECT_EQ(ok.value->tiers, (std::vector<std::vector<std::size_t>>{{1}, {0, 3}, {2}}));
  EXPECT_EQ(ok.value->candidate_count(), 4u);

  auto missing = parse_ranking(R"({"Ranked Responses": ["response_1"], "Rationale": ""})", 2);
  EXPECT_EQ(missing.failure, Errc::IncompletePermutation);
  auto repeated = parse_ranking(R"({"Ranked Responses": ["response_1", "response_1"]})", 2);
  EXPECT_EQ(repeated.failure, Errc::IncompletePermutation);
  EXPECT_FALSE(parse_ranking(R"({"Ranked Responses": ["response_1", "response_3"]})", 2).value);
  EXPECT_FALSE(parse_ranking("response_1 > response_2", 2).value);
}

TEST(Ranking, RankCandidatesRepromptsThenSucceeds) {
  auto judge = ModelEndpoint{
      ScriptedBackend::replay({"I like the second", R"({"Ranked Responses": ["response_2", "response_1"]})"}), "j",
      0.0};
  auto r = rank_candidates(context_of(3), {"x", "y"}, judge);
  EXPECT_EQ(r.tiers.front(), std::vector<std::size_t>{1});
  Json j = r;
  EXPECT_EQ(j.at("Ranked Responses").at(0), "response_2");
  EXPECT_EQ(j.get<RankingRecord>(), r);
  EXPECT_EQ(render_candidates({"x", "y"}), "response_1: x\nresponse_2: y");
}

TEST(Pairs, RankingPairsMatchBruteForceForAllStrictOrders) {
  for (std::size_t k = 2; k <= 5; ++k) {
    auto set = set_of(k);
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    do {
      RankingRecord r;
      for (auto i : order) r.tiers.push_back({i});
      std::multiset<PairKey> bottom, rest;
      bottom.emplace(set.candidates[order.front()], set.candidates[order.back()]);
      for (std::size_t i = 1; i < k; ++i) rest.emplace(set.candidates[order.front()], set.candidates[order[i]]);
      EXPECT_EQ(keys(pairs_from_ranking(set, r, PairPolicy::TopVsBottom)), bottom);
      EXPECT_EQ(keys(pairs_from_ranking(set, r, PairPolicy::TopVsRest)), rest);
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST(Pairs, TiesNeverPairWithinATier) {
  auto set = set_of(4);
  RankingRecord all_tied{{{0, 1, 2, 3}}, ""};
  EXPECT_TRUE(pairs_from_ranking(set, all_tied).empty());
  RankingRecord r{{{0, 2}, {1}, {3}}, "why"};
  auto pairs = pairs_from_ranking(set, r);
  EXPECT_EQ(keys(pairs), (std::multiset<PairKey>{{"candidate 0", "candidate 3"}, {"candidate 2", "candidate 3"}}));
  EXPECT_EQ(pairs[0].provenance.kind, Provenance::Kind::JudgeRanking);
  EXPECT_EQ(pairs[0].provenance.record_id, "c-test");
  EXPECT_EQ(pairs[0].rationale, "why");
  RankingRecord short_ranking{{{0}, {1}}, ""};
  EXPECT_THROW(pairs_from_ranking(set, short_ranking), Error);
}

TEST(Annotations, FourShapesYieldOneOneZeroTwo) {
  auto a = pairs_from_annotation(annotation(Preferred::A));
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].chosen, "A");
  EXPECT_EQ(a[0].rejected, "B");
  auto b = pairs_from_annotation(annotation(Preferred::B));
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].chosen, "B");
  EXPECT_TRUE(pairs_from_annotation(annotation(Preferred::Neither)).empty());
  auto rw = pairs_from_annotation(annotation(Preferred::Neither, "R"));
  EXPECT_EQ(keys(rw), (std::multiset<PairKey>{{"R", "A"}, {"R", "B"}}));
  EXPECT_EQ(rw[0].provenance.kind, Provenance::Kind::Rewrite);
}

TEST(Annotations, ValidationAndJson) {
  EXPECT_THROW(validate_annotation(annotation(Preferred::A, "R")), Error);
  auto r = annotation(Preferred::A);
  r.response_b = "A";
  EXPECT_THROW(validate_annotation(r), Error);
  r = annotation(Preferred::B);
  r.rationale = " ";
  EXPECT_THROW(validate_annotation(r), Error);
  r = annotation(Preferred::Neither, "R");
  Json j = r;
  EXPECT_EQ(j.at("preferred"), "neither");
  EXPECT_EQ(j.get<AnnotationRecord>(), r);
}

TEST(Export, SftAndDpoRoundTrip) {
  TempDir dir("export");
  auto outcome = assess_sft_transcript("p-1", transcript(50));
  auto d = std::get<SftDialogue>(outcome);
  auto report = export_sft({d}, dir / "nested" / "sft.jsonl");
  EXPECT_EQ(report.line_count, 1u);
  EXPECT_EQ(report.sha256.size(), 64u);
  auto back = read_sft(dir / "nested" / "sft.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].utterances, d.utterances);
  EXPECT_EQ(back[0].footer_strategies, d.footer_strategies);
  auto line = sft_line(d);
  EXPECT_EQ(line.at("messages").at(0).at("role"), "user");
  EXPECT_EQ(line.at("strategies").at(0), "Motivational Interviewing (MI)");

  auto pairs = pairs_from_annotation(annotation(Preferred::Neither, "R"));
  export_dpo(pairs, dir / "dpo.jsonl");
  EXPECT_EQ(read_dpo(dir / "dpo.jsonl"), pairs);
  EXPECT_EQ(dpo_line(pairs[0]).at("prompt"), "Patient: c0");

  auto short_dialogue = d;
  short_dialogue.utterances.resize(10);
  EXPECT_THROW(export_sft({short_dialogue}, dir / "bad.jsonl"), Error);
}

TEST(Export, ReadReportsCorruptLine) {
  TempDir dir("corrupt");
  std::ofstream(dir / "x.jsonl") << "{\"a\":1}\n{\"a\":\n";
  try {
    read_jsonl(dir / "x.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Corruption);
    EXPECT_TRUE(contains(e.what(), "x.jsonl:2"));
  }
}
