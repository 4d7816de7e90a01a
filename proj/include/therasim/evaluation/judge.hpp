#pragma once

// LLM-as-a-judge calls: five-dimension scoring, patient motivation/confidence
// scoring, pairwise full-conversation comparison and deficiency flagging.
// Every parser returns a score or a failure; none admits an out-of-range value.

#include <string>
#include <string_view>
#include <vector>

#include "therasim/backends/backend.hpp"
#include "therasim/backends/templates.hpp"
#include "therasim/core/types.hpp"

namespace therasim {

inline constexpr int kJudgeReprompts = 3;

// Judge-facing transcript: "Patient:"/"Therapist:" lines, no trailing newline.
std::string render_conversation(const std::vector<Utterance>& utterances);

ParseOutcome<ScoreCard> parse_score_card(std::string_view reply);
ScoreCard score_dimensions(const SessionRecord& session, const ModelEndpoint& judge,
                           const TemplateRegistry& templates = TemplateRegistry::builtin());

struct StateScores {
  double motivation = 0.0;
  double confidence = 0.0;
};
ParseOutcome<StateScores> parse_state_scores(std::string_view reply);

// Scores the patient's state after utterance `at_utterance` (inclusive).
// Requires at least one patient utterance in that prefix.
MotivationConfidence score_state(const std::vector<Utterance>& history, std::size_t at_utterance,
                                 const ModelEndpoint& judge,
                                 const TemplateRegistry& templates = TemplateRegistry::builtin());

enum class Winner { First, Second, Tie };
std::string_view to_string(Winner w);
Winner winner_from_string(std::string_view s);

struct WinRecord {
  std::string conversation_a_id;
  std::string conversation_b_id;
  Winner winner = Winner::Tie;
  int orders_run = 1;

  bool operator==(const WinRecord&) const = default;
};

void to_json(Json& j, const WinRecord& w);
void from_json(const Json& j, WinRecord& w);

// Accepts exactly "1" or "2" after trimming whitespace.
ParseOutcome<int> parse_pairwise_choice(std::string_view reply);

// With debias the judge sees both presentation orders; agreement gives that
// winner and disagreement gives a tie.
WinRecord compare_pairwise(const SessionRecord& a, const SessionRecord& b, const ModelEndpoint& judge,
                           bool debias = true, const TemplateRegistry& templates = TemplateRegistry::builtin());

struct DeficiencyFlags {
  bool lack_of_empathy = false;
  bool inappropriate_strategy_use = false;
  bool unclear_expression = false;

  bool operator==(const DeficiencyFlags&) const = default;
};

ParseOutcome<DeficiencyFlags> parse_deficiency_flags(std::string_view reply);
DeficiencyFlags flag_deficiencies(const SessionRecord& session, const ModelEndpoint& judge,
                                  const TemplateRegistry& templates = TemplateRegistry::builtin());

}  // namespace therasim
