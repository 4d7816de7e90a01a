#include <gtest/gtest.h>

#include <map>

#include "fakes.hpp"
#include "therasim/core/validate.hpp"
#include "therasim/simulation/batch.hpp"
#include "therasim/simulation/session.hpp"

using namespace therasim;
using namespace therasim::testing;

namespace {

SessionConfig quiet_config() {
  SessionConfig c;
  c.seed = 7;
  return c;
}

std::vector<Utterance> history_ending_with(Role last_role, std::string text, std::size_t length = 2) {
  std::vector<Utterance> h;
  for (std::size_t i = 0; i < length; ++i) {
    h.push_back(Utterance{i % 2 == 0 ? Role::Patient : Role::Therapist, "line " + std::to_string(i), i, {}});
  }
  h.back().role = last_role;
  h.back().text = std::move(text);
  return h;
}

// Patient `farewell` answered by the therapist, as the last exchange.
std::vector<Utterance> farewell_exchange(std::string farewell, std::size_t length = 4) {
  auto h = history_ending_with(Role::Therapist, "Take care.", length);
  h[length - 2].text = std::move(farewell);
  return h;
}

}  // namespace

TEST(Memory, RejectsDecreasingTurnsAndRendersWindow) {
  PatientMemory m;
  EXPECT_EQ(m.render_recent(5), "");
  m.append({MemoryKind::Interaction, "first", 1});
  m.append({MemoryKind::EmotionalState, "second", 3});
  m.append({MemoryKind::CopingMechanism, "third", 3});
  EXPECT_THROW(m.append({MemoryKind::Interaction, "late", 2}), Error);
  EXPECT_EQ(m.render_recent(2),
            "Recent memory:\n- [emotional_state, utterance 3] second\n- [coping_mechanism, utterance 3] third\n");
  EXPECT_EQ(memory_kind_from_string(to_string(MemoryKind::EnvironmentalInfluence)),
            MemoryKind::EnvironmentalInfluence);
}

TEST(SessionConfig, ValidatesRanges) {
  SessionConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_utterances = 59;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.event_probability = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.event_period_k = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.resolution_threshold = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.farewell_lexicon.clear();
  EXPECT_THROW(c.validate(), Error);
}

TEST(SessionConfig, JsonKeepsDefaultsForAbsentKeys) {
  auto c = Json::parse(R"({"seed": 3, "event_probability": 0.5})").get<SessionConfig>();
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.event_probability, 0.5);
  EXPECT_EQ(c.max_utterances, 60u);
  EXPECT_EQ(c.event_period_k, 10u);
  Json j = c;
  auto back = j.get<SessionConfig>();
  EXPECT_EQ(back.farewell_lexicon, c.farewell_lexicon);
  EXPECT_THROW(Json::parse(R"({"max_utterances": 3})").get<SessionConfig>(), Error);
}

TEST(Seeds, DerivedPerProfileAndStable) {
  EXPECT_EQ(derive_session_seed(7, "p-1"), derive_session_seed(7, "p-1"));
  EXPECT_NE(derive_session_seed(7, "p-1"), derive_session_seed(7, "p-2"));
  EXPECT_NE(derive_session_seed(7, "p-1"), derive_session_seed(8, "p-1"));
}

TEST(Environment, DrawsOnlyOnEveryKthPatientTurn) {
  SessionConfig c;
  c.event_probability = 1.0;
  std::mt19937_64 rng(1);
  PatientMemory m;
  std::size_t injected = 0;
  for (std::size_t turn = 1; turn <= 30; ++turn) {
    auto before = rng;
    auto e = maybe_inject_event(m, turn, 2 * (turn - 1), c, rng);
    if (turn % 10 == 0) {
      ASSERT_TRUE(e);
      EXPECT_EQ(e->injected_at_turn, 2 * (turn - 1));
      ++injected;
    } else {
      EXPECT_FALSE(e);
      EXPECT_EQ(before, rng) << "rng consumed on a non-event turn";
    }
  }
  EXPECT_EQ(injected, 3u);
  EXPECT_EQ(m.entries().size(), 3u);
  EXPECT_EQ(m.entries().back().kind, MemoryKind::EnvironmentalInfluence);

  c.environment_enabled = false;
  EXPECT_FALSE(maybe_inject_event(m, 10, 18, c, rng));
  EXPECT_THROW(maybe_inject_event(m, 31, 60, SessionConfig{}, rng), Error);
}

TEST(Environment, FrequencyAndCategoryWeights) {
  SessionConfig c;
  c.event_period_k = 1;
  std::mt19937_64 rng(99);
  PatientMemory m;
  const int trials = 40000;
  int hits = 0;
  std::map<EventCategory, int> by_category;
  for (int i = 0; i < trials; ++i) {
    if (auto e = maybe_inject_event(m, 1, 0, c, rng)) {
      ++hits;
      ++by_category[e->category];
      EXPECT_FALSE(e->description.empty());
      EXPECT_EQ(e->category == EventCategory::Other, !e->other_label.empty());
    }
  }
  double rate = static_cast<double>(hits) / trials;
  EXPECT_NEAR(rate, 0.3, 0.01);
  const std::map<EventCategory, double> weights{{EventCategory::JobLoss, 0.20},
                                                {EventCategory::RelationshipBreakdown, 0.20},
                                                {EventCategory::PeerPressure, 0.25},
                                                {EventCategory::Stressor, 0.25},
                                                {EventCategory::Other, 0.10}};
  for (const auto& [cat, w] : weights) {
    EXPECT_NEAR(static_cast<double>(by_category[cat]) / hits, w, 0.02) << to_string(cat);
  }
}

TEST(Environment, UniformDrawIsInUnitInterval) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Prompts, TherapistPromptCarriesCatalogsAndCounts) {
  StrategyCounts usage{{StrategyRef::framework(Framework::CBT), 3}};
  auto prompt = render_therapist_prompt(history_ending_with(Role::Patient, "hi", 1), usage);
  EXPECT_TRUE(contains(prompt, "Cognitive Behavioral Therapy (CBT): 3 times used."));
  EXPECT_TRUE(contains(prompt, "Motivational Interviewing (MI): 0 times used."));
  EXPECT_TRUE(contains(prompt, "18. Support the patient"));
  EXPECT_TRUE(contains(prompt, "Patient: hi"));
  EXPECT_FALSE(contains(prompt, "{strategy}"));
}

TEST(Prompts, PatientPromptUsesDifficultyAndMemory) {
  PatientMemory m;
  m.append({MemoryKind::EnvironmentalInfluence, "lost job", 0});
  auto patient = std::make_shared<ScriptedBackend>(std::vector<ScriptEntry>{{"*", "Patient: **hello** there"}});
  auto u = patient_turn(make_profile(1, Difficulty::Hard), m, {}, ModelEndpoint{patient, "p", 0.7});
  EXPECT_EQ(u.role, Role::Patient);
  EXPECT_EQ(u.text, "**hello** there");
  const auto prompt = patient->requests().front().messages.front().content;
  EXPECT_TRUE(contains(prompt, "deeply entrenched pessimism"));
  EXPECT_TRUE(contains(prompt, "lost job"));
  EXPECT_TRUE(contains(prompt, "daily cannabis"));
}

TEST(TherapistTurn, FooterStrategiesAreStrippedAndCounted) {
  StrategyCounts usage;
  auto therapist = ModelEndpoint{ScriptedBackend::replay({"Let's plan.\n**Strategies:** MI, Actionable Strategy 2"}),
                                 "t", 0.7};
  auto turn = therapist_turn(history_ending_with(Role::Patient, "hi", 1), usage, therapist, ModelEndpoint{});
  EXPECT_TRUE(turn.from_footer);
  EXPECT_EQ(turn.utterance.text, "Let's plan.");
  EXPECT_EQ(turn.utterance.strategies.size(), 2u);
  EXPECT_EQ(usage[StrategyRef::framework(Framework::MI)], 1);
  EXPECT_EQ(usage[StrategyRef::actionable(2)], 1);
}

TEST(TherapistTurn, FallsBackToAttribution) {
  StrategyCounts usage;
  auto therapist = ModelEndpoint{ScriptedBackend::replay({"How does that feel?"}), "t", 0.7};
  auto attribution = ModelEndpoint{ScriptedBackend::replay({R"({"strategies": ["CBT", "Hypnosis"]})"}), "j", 0.0};
  auto turn = therapist_turn(history_ending_with(Role::Patient, "hi", 1), usage, therapist, attribution);
  EXPECT_FALSE(turn.from_footer);
  ASSERT_EQ(turn.utterance.strategies.size(), 1u);
  EXPECT_EQ(turn.utterance.strategies[0], StrategyRef::framework(Framework::CBT));
  EXPECT_EQ(turn.warnings.size(), 1u);

  auto no_attr = therapist_turn(history_ending_with(Role::Patient, "hi", 1), usage,
                                ModelEndpoint{ScriptedBackend::replay({"Plain."}), "t", 0.7}, ModelEndpoint{});
  EXPECT_TRUE(no_attr.utterance.strategies.empty());
  EXPECT_FALSE(no_attr.warnings.empty());
}

TEST(Termination, LexiconMatchesWholePhrases) {
  const auto& lex = default_farewell_lexicon();
  EXPECT_TRUE(matches_farewell("Okay. Goodbye!", lex));
  EXPECT_TRUE(matches_farewell("THANK YOU FOR YOUR HELP", lex));
  EXPECT_TRUE(matches_farewell("I’ll see you next week", lex));
  EXPECT_FALSE(matches_farewell("My ex-boyfriend was a bystander", lex));
  EXPECT_FALSE(matches_farewell("I can't say bye-bye to weed", std::vector<std::string>{"goodbye"}));
}

TEST(Termination, DecisionOrder) {
  SessionConfig c;
  c.judge_enabled = false;
  EXPECT_EQ(detect_termination(farewell_exchange("Goodbye"), c, {}), TerminationDecision::Resolved);
  // The farewell is judged only once the therapist has answered it.
  EXPECT_EQ(detect_termination(history_ending_with(Role::Patient, "Goodbye", 3), c, {}), TerminationDecision::Continue);
  EXPECT_EQ(detect_termination(history_ending_with(Role::Therapist, "Goodbye"), c, {}), TerminationDecision::Continue);
  EXPECT_EQ(detect_termination(farewell_exchange("still here"), c, {}), TerminationDecision::Continue);
  EXPECT_EQ(detect_termination(history_ending_with(Role::Therapist, "x", 60), c, {}), TerminationDecision::MaxTurns);
  EXPECT_EQ(detect_termination(farewell_exchange("Goodbye", 60), c, {}), TerminationDecision::Resolved);

  c.judge_enabled = true;
  std::optional<MotivationConfidence> scored;
  EXPECT_EQ(detect_termination(farewell_exchange("bye"), c, prompt_aware_judge({4.0, 4.0}),
                               TemplateRegistry::builtin(), nullptr, &scored),
            TerminationDecision::Resolved);
  ASSERT_TRUE(scored);
  EXPECT_EQ(detect_termination(farewell_exchange("bye"), c, prompt_aware_judge({4.5, 3.9})),
            TerminationDecision::Continue);
  EXPECT_EQ(detect_termination(farewell_exchange("bye", 60), c, prompt_aware_judge({4.5, 3.9})),
            TerminationDecision::MaxTurns);

  std::vector<std::string> warnings;
  auto broken = ModelEndpoint{ScriptedBackend::replay({}), "j", 0.0};
  EXPECT_EQ(detect_termination(farewell_exchange("bye"), c, broken, TemplateRegistry::builtin(), &warnings),
            TerminationDecision::Resolved);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(SessionDriver, RunsToResolutionBeforeTheCap) {
  auto record = run_session(make_profile(1), quiet_config(), fake_backends(5));
  EXPECT_EQ(record.termination.kind, Termination::Kind::Resolved);
  EXPECT_EQ(record.utterances.size(), 10u);
  EXPECT_TRUE(validate_session(record).empty());
  EXPECT_EQ(record.model, "therapist-fake");
  EXPECT_EQ(record.seed, derive_session_seed(7, "p-1"));
  // Five therapist footers: SFBT; MBI, RP; Peer Support; Coping; MI, CBT.
  EXPECT_EQ(unique_strategy_count(record.strategy_counts), 7u);
}

TEST(SessionDriver, SixUtteranceScriptEndingInFarewell) {
  auto patient = ScriptedBackend::replay({"I drink most nights.", "Maybe I could cut back.",
                                          "Thank you, I feel ready. Goodbye."});
  auto therapist = ScriptedBackend::replay({"Tell me more.\n**Strategies:** MI", "What would help?\n**Strategies:** SFBT",
                                            "Take care.\n**Strategies:** MI"});
  auto b = fake_backends(std::nullopt);
  b.patient = ModelEndpoint{patient, "p", 0.7};
  b.therapist = ModelEndpoint{therapist, "t", 0.7};
  auto record = run_session(make_profile(1), quiet_config(), b);
  EXPECT_EQ(record.termination.kind, Termination::Kind::Resolved);
  EXPECT_EQ(record.utterances.size(), 6u);
}

TEST(SessionDriver, StopsAtTheCap) {
  auto record = run_session(make_profile(2), quiet_config(), fake_backends(std::nullopt));
  EXPECT_EQ(record.termination.kind, Termination::Kind::MaxTurns);
  EXPECT_EQ(record.utterances.size(), 60u);
  EXPECT_EQ(record.utterances.front().role, Role::Patient);
  EXPECT_TRUE(validate_session(record).empty());
}

TEST(SessionDriver, LowJudgeScoresKeepTheSessionGoing) {
  auto record = run_session(make_profile(3), quiet_config(), fake_backends(3, JudgeScores{2.0, 1.5}));
  EXPECT_EQ(record.termination.kind, Termination::Kind::MaxTurns);
}

TEST(SessionDriver, BackendFailureBecomesErrorTermination) {
  auto b = fake_backends(std::nullopt);
  b.therapist = ModelEndpoint{ScriptedBackend::replay({"one reply"}), "t", 0.7};
  auto record = run_session(make_profile(4), quiet_config(), b);
  EXPECT_EQ(record.termination.kind, Termination::Kind::Error);
  EXPECT_EQ(record.utterances.size(), 3u);
  EXPECT_TRUE(contains(record.termination.reason, "Exhausted"));
}

TEST(SessionDriver, HumanTurnsEnforceRoleAndCap) {
  auto c = quiet_config();
  c.max_utterances = 4;
  SessionDriver d(make_profile(5), c, fake_backends(std::nullopt));
  EXPECT_EQ(d.next_role(), Role::Patient);
  EXPECT_THROW(d.human_step(Role::Therapist, "hello"), Error);
  EXPECT_THROW(d.human_step(Role::Patient, "   "), Error);
  d.human_step(Role::Patient, "  I keep relapsing ");
  EXPECT_EQ(d.record().utterances[0].text, "I keep relapsing");
  d.therapist_step();
  d.human_step(Role::Patient, "ok");
  d.therapist_step();
  EXPECT_TRUE(d.finished());
  EXPECT_EQ(d.record().termination.kind, Termination::Kind::MaxTurns);
  try {
    d.human_step(Role::Patient, "more");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Conflict);
  }
}

TEST(SessionDriver, CloseOnRequest) {
  SessionDriver d(make_profile(6), quiet_config(), fake_backends(std::nullopt));
  d.patient_step();
  d.close("annotator left");
  EXPECT_EQ(d.record().termination.kind, Termination::Kind::Error);
  EXPECT_EQ(d.record().termination.reason, "closed: annotator left");

  auto c = quiet_config();
  c.judge_enabled = false;
  c.farewell_lexicon = {"see you"};
  SessionDriver e(make_profile(6), c, fake_backends(std::nullopt));
  e.patient_step();
  e.therapist_step();
  e.human_step(Role::Patient, "fine, see you");
  EXPECT_FALSE(e.finished());
  e.therapist_step();
  EXPECT_TRUE(e.finished());
  EXPECT_EQ(e.record().termination.kind, Termination::Kind::Resolved);

  SessionDriver f(make_profile(6), c, fake_backends(std::nullopt));
  f.human_step(Role::Patient, "see you");
  f.close("left early");
  EXPECT_EQ(f.record().termination.kind, Termination::Kind::Resolved);
}

TEST(SessionDriver, ResumeReplaysEventsAndContinuesIdentically) {
  auto c = quiet_config();
  c.event_period_k = 1;
  c.event_probability = 0.5;
  auto full = run_session(make_profile(8), c, fake_backends(std::nullopt));
  ASSERT_FALSE(full.events.empty());

  // Interrupt after 20 utterances, then resume with backends advanced to the
  // same point.
  SessionDriver first(make_profile(8), c, fake_backends(std::nullopt));
  while (first.record().utterances.size() < 20) {
    first.next_role() == Role::Patient ? first.patient_step() : first.therapist_step();
  }
  auto backends = fake_backends(std::nullopt);
  for (int i = 0; i < 10; ++i) {
    backends.patient.ask("skip");
    backends.therapist.ask("skip");
  }
  auto resumed = SessionDriver::resume(make_profile(8), c, backends, first.record(), true);
  EXPECT_EQ(resumed.memory().entries().size(), first.memory().entries().size());
  EXPECT_EQ(resumed.run(), full);

  auto tampered = first.record();
  tampered.events.push_back(EnvironmentEvent{EventCategory::Stressor, "", "fake", 2});
  try {
    SessionDriver::resume(make_profile(8), c, fake_backends(std::nullopt), tampered, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Corruption);
  }
}

TEST(Batch, ManifestCountsAndFailures) {
  std::vector<PatientProfile> profiles;
  for (int i = 0; i < 6; ++i) profiles.push_back(make_profile(i, kAllDifficulties[i % 3]));
  auto factory = [](const PatientProfile& p) {
    auto b = fake_backends(4);
    if (p.id == "p-5") b.patient = ModelEndpoint{ScriptedBackend::replay({}), "p", 0.7};
    return b;
  };
  auto result = run_batch(profiles, quiet_config(), factory);
  EXPECT_EQ(result.records.size(), 6u);
  ASSERT_EQ(result.manifest.failures.size(), 1u);
  EXPECT_EQ(result.manifest.failures[0].profile_id, "p-5");
  EXPECT_EQ(result.manifest.session_ids.size(), 5u);
  std::size_t total = 0;
  for (const auto& [d, n] : result.manifest.difficulty_counts) total += n;
  EXPECT_EQ(total, 5u);
  Json j = result.manifest;
  EXPECT_EQ(j.get<RunManifest>(), result.manifest);
  EXPECT_THROW(run_batch({}, quiet_config(), factory), Error);
}

TEST(Batch, ParallelismDoesNotChangeRecords) {
  std::vector<PatientProfile> profiles;
  for (int i = 0; i < 9; ++i) profiles.push_back(make_profile(i, kAllDifficulties[i % 3]));
  auto c = quiet_config();
  c.event_period_k = 2;
  auto factory = [](const PatientProfile& p) { return fake_backends(4 + static_cast<int>(p.id.back() - '0')); };
  auto serial = run_batch(profiles, c, factory, 1);
  auto parallel = run_batch(profiles, c, factory, 4);
  EXPECT_EQ(serial.records, parallel.records);
  EXPECT_EQ(serial.manifest, parallel.manifest);
}

TEST(Batch, CompletedSessionsAreSkipped) {
  std::vector<PatientProfile> profiles{make_profile(1), make_profile(2)};
  auto factory = [](const PatientProfile&) { return fake_backends(3); };
  auto first = run_batch(profiles, quiet_config(), factory);
  std::set<std::string> done{first.manifest.session_ids[0]};
  auto second = run_batch(profiles, quiet_config(), factory, 1, done);
  EXPECT_EQ(second.records.size(), 1u);
  EXPECT_EQ(second.records[0], first.records[1]);
  EXPECT_EQ(second.manifest.session_ids, first.manifest.session_ids);
}
