#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fakes.hpp"
#include "therasim/datasets/datasets.hpp"
#include "therasim/service/cli.hpp"
#include "therasim/service/store.hpp"

using namespace therasim;
using namespace therasim::testing;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "therasim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string sft_transcript() {
  std::string text;
  for (int i = 0; i < 50; ++i) text += (i % 2 == 0 ? "Patient: p" : "Therapist: t") + std::to_string(i) + "\n";
  return text + "**Strategies:** MI, CBT\n";
}

// Writes a role -> script file: every role answers with wildcard entries.
std::filesystem::path write_scripts(const TempDir& dir) {
  Json patient = Json::array(), therapist = Json::array(), judge = Json::array(), generator = Json::array();
  for (int i = 0; i < 3; ++i) patient.push_back("I keep thinking about using (" + std::to_string(i) + ").");
  patient.push_back("Thank you for your help, goodbye.");
  for (int i = 0; i < 30; ++i) therapist.push_back("Reply " + std::to_string(i) + "\n**Strategies:** MI");
  for (int i = 0; i < 40; ++i) judge.push_back(R"({"Motivation": 4.5, "Confidence": 4.5})");
  generator.push_back(R"({"spans": []})");
  generator.push_back(R"({"Personality Traits": "shy", "Substance Use History": "alcohol",
      "Significant Life Events": null, "Behavioral Themes": null, "Motivations for Substance Use": "stress"})");
  Json scripts{{"patient", patient}, {"therapist", therapist}, {"judge", judge}, {"generator", generator}};
  auto path = dir / "scripts.json";
  std::ofstream(path) << scripts.dump();
  return path;
}

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"profiles"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, RuntimeErrorsExitWithOne) {
  TempDir dir("cli-err");
  auto r = run({"--out", dir.path().string(), "--backend", "carrier-pigeon", "simulate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(contains(r.err, "unknown backend"));
  auto empty = run({"--out", dir.path().string(), "--backend", "scripted", "--script",
                    write_scripts(dir).string(), "simulate"});
  EXPECT_EQ(empty.code, 1);
  EXPECT_TRUE(contains(empty.err, "no profiles"));
}

TEST(Cli, SimulateIsDeterministicAcrossRuns) {
  TempDir dir("cli-sim");
  auto scripts = write_scripts(dir);
  for (auto sub : {"a", "b"}) {
    JsonlStore store(dir / sub);
    for (int i = 0; i < 3; ++i) store.append("profiles", Json(make_profile(i, kAllDifficulties[i])));
    auto r = run({"--out", (dir / sub).string(), "--backend", "scripted", "--script", scripts.string(), "--seed",
                  "7", "simulate"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(contains(r.out, "3 sessions"));
  }
  EXPECT_EQ(read_file(dir / "a" / "sessions.jsonl"), read_file(dir / "b" / "sessions.jsonl"));
  EXPECT_EQ(read_file(dir / "a" / "manifest.json"), read_file(dir / "b" / "manifest.json"));
  auto sessions = JsonlStore(dir / "a").load_as<SessionRecord>("sessions");
  ASSERT_EQ(sessions.size(), 3u);
  EXPECT_EQ(sessions[0].termination.kind, Termination::Kind::Resolved);
  EXPECT_EQ(sessions[0].utterances.size(), 8u);

  auto resumed = run({"--out", (dir / "a").string(), "--backend", "scripted", "--script", scripts.string(), "--seed",
                      "7", "simulate", "--resume"});
  EXPECT_EQ(resumed.code, 0) << resumed.err;
  EXPECT_EQ(JsonlStore(dir / "a").load("sessions").size(), 3u);
}

TEST(Cli, ProfilesSftScoreAndReport) {
  TempDir dir("cli-pipe");
  auto scripts = write_scripts(dir);
  std::ofstream(dir / "posts.jsonl") << R"({"author_id": "u1", "text": "I drink to cope, mail me at a@b.io", "is_main": true})"
                                     << "\n";
  auto base = std::vector<std::string>{"--out", dir.path().string(), "--backend", "scripted", "--script",
                                       scripts.string()};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return run(args);
  };
  auto profiles = with({"profiles", "--in", (dir / "posts.jsonl").string()});
  ASSERT_EQ(profiles.code, 0) << profiles.err;
  EXPECT_TRUE(contains(profiles.out, "#Authors"));
  ASSERT_EQ(JsonlStore(dir.path()).load("profiles").size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "corpus_stats.json"));

  // The shared generator script is shaped for the profile stage.
  Json sft_scripts{{"generator", Json::array({sft_transcript()})}};
  std::ofstream(dir / "sft_scripts.json") << sft_scripts.dump();
  auto sft = run({"--out", dir.path().string(), "--backend", "scripted", "--script",
                  (dir / "sft_scripts.json").string(), "sft"});
  ASSERT_EQ(sft.code, 0) << sft.err;
  EXPECT_EQ(read_sft(dir / "sft.jsonl").size(), 1u);

  ASSERT_EQ(with({"simulate"}).code, 0);
  auto score = with({"score"});
  EXPECT_EQ(score.code, 1) << "dimension scoring has no script entries";
  EXPECT_EQ(JsonlStore(dir.path()).load("scores").size(), 1u);
  auto report = with({"report", "--format", "csv"});
  ASSERT_EQ(report.code, 0) << report.err;
  EXPECT_TRUE(contains(report.out, "section,model,difficulty,metric,value,count"));
  EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
}

TEST(Cli, DpoMergesRankedAndAnnotatedPairs) {
  TempDir dir("cli-dpo");
  auto scripts = write_scripts(dir);
  {
    JsonlStore store(dir.path());
    store.append("profiles", Json(make_profile(1)));
  }
  ASSERT_EQ(run({"--out", dir.path().string(), "--backend", "scripted", "--script", scripts.string(), "simulate"}).code,
            0);

  Json dpo_scripts{
      {"therapist", Json::array({"Tell me about last night.", "What would you like to change?"})},
      {"judge", Json::array({R"({"Ranked Responses": ["response_2", "response_1"], "Rationale": "open question"})"})}};
  std::ofstream(dir / "dpo_scripts.json") << dpo_scripts.dump();

  AnnotationRecord a;
  a.context = {Utterance{Role::Patient, "I slipped.", 0, {}}};
  a.response_a = "That sounds hard.";
  a.response_b = "Stop it.";
  a.preferred = Preferred::A;
  a.rationale = "warmer";
  JsonlStore annotations(dir / "ann");
  annotations.append("annotations", Json(a));

  auto r = run({"--out", dir.path().string(), "--backend", "scripted", "--script", (dir / "dpo_scripts.json").string(),
                "dpo", "--k", "2", "--states", "1", "--annotations", (dir / "ann" / "annotations.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto pairs = read_dpo(dir / "dpo.jsonl");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].chosen, "What would you like to change?");
  EXPECT_EQ(pairs[1].chosen, "That sounds hard.");

  // An edited sealed line is rejected.
  auto text = read_file(dir / "ann" / "annotations.jsonl");
  text.replace(text.find("warmer"), 6, "colder");
  std::ofstream(dir / "ann" / "annotations.jsonl", std::ios::trunc) << text;
  auto tampered = run({"--out", dir.path().string(), "--backend", "scripted", "--script",
                       (dir / "dpo_scripts.json").string(), "dpo", "--k", "2", "--states", "1", "--annotations",
                       (dir / "ann" / "annotations.jsonl").string()});
  EXPECT_EQ(tampered.code, 1);
  EXPECT_TRUE(contains(tampered.err, "Corruption")) << tampered.err;
}
