#include "therasim/evaluation/judge.hpp"

#include <algorithm>

#include "therasim/core/json_text.hpp"

namespace therasim {
namespace {

std::string_view reprompt(const TemplateRegistry& templates) { return templates.get("reprompt_format").body; }

void require_judge(const ModelEndpoint& judge) {
  if (!judge) throw Error(Errc::Precondition, "judge endpoint has no backend");
}

// Score in [1, 5] from a JSON value, or an explanation of why not.
std::optional<double> score_value(const Json& v, std::string_view name, std::string& why) {
  auto d = json_decimal(v);
  if (!d) {
    why = "\"" + std::string(name) + "\" is not a number";
    return std::nullopt;
  }
  if (!in_score_range(*d)) {
    why = "\"" + std::string(name) + "\" is outside 1-5";
    return std::nullopt;
  }
  return d;
}

}  // namespace

std::string render_conversation(const std::vector<Utterance>& utterances) {
  auto text = render_transcript(utterances);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

ParseOutcome<ScoreCard> parse_score_card(std::string_view reply) {
  using Outcome = ParseOutcome<ScoreCard>;
  auto j = extract_json_object(reply);
  if (!j) return Outcome::fail("no JSON object in reply");
  const auto& names = ScoreCard::dimension_names();
  if (j->size() != names.size()) return Outcome::fail("expected exactly the five dimension keys");
  std::array<double, 5> v{};
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = j->find(std::string(names[i]));
    if (it == j->end()) return Outcome::fail("missing \"" + std::string(names[i]) + "\"");
    std::string why;
    auto d = score_value(*it, names[i], why);
    if (!d) return Outcome::fail(why);
    v[i] = *d;
  }
  return Outcome::ok(ScoreCard(v[0], v[1], v[2], v[3], v[4]));
}

ScoreCard score_dimensions(const SessionRecord& session, const ModelEndpoint& judge,
                           const TemplateRegistry& templates) {
  if (session.utterances.size() < 2) throw Error(Errc::Precondition, "scoring needs at least two utterances");
  require_judge(judge);
  auto request = judge.request(
      templates.render("evaluation_scoring", {{"conversation", render_conversation(session.utterances)}}));
  return complete_with_reprompts<ScoreCard>(*judge.backend, std::move(request), parse_score_card, kJudgeReprompts,
                                            reprompt(templates));
}

ParseOutcome<StateScores> parse_state_scores(std::string_view reply) {
  using Outcome = ParseOutcome<StateScores>;
  auto j = extract_json_object(reply);
  if (!j) return Outcome::fail("no JSON object in reply");
  auto find = [&j](std::string_view a, std::string_view b) {
    auto it = j->find(std::string(a));
    return it != j->end() ? it : j->find(std::string(b));
  };
  auto m = find("Motivation", "motivation");
  auto c = find("Confidence", "confidence");
  if (m == j->end() || c == j->end()) return Outcome::fail("expected \"Motivation\" and \"Confidence\"");
  std::string why;
  auto mv = score_value(*m, "Motivation", why);
  if (!mv) return Outcome::fail(why);
  auto cv = score_value(*c, "Confidence", why);
  if (!cv) return Outcome::fail(why);
  return Outcome::ok(StateScores{*mv, *cv});
}

MotivationConfidence score_state(const std::vector<Utterance>& history, std::size_t at_utterance,
                                 const ModelEndpoint& judge, const TemplateRegistry& templates) {
  if (at_utterance >= history.size()) throw Error(Errc::Precondition, "at_utterance outside the transcript");
  std::vector<Utterance> prefix(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(at_utterance + 1));
  if (std::none_of(prefix.begin(), prefix.end(), [](const Utterance& u) { return u.role == Role::Patient; })) {
    throw Error(Errc::Precondition, "no patient utterance to score");
  }
  require_judge(judge);
  auto request = judge.request(templates.render("state_scoring", {{"conversation", render_conversation(prefix)}}));
  auto scores = complete_with_reprompts<StateScores>(*judge.backend, std::move(request), parse_state_scores,
                                                     kJudgeReprompts, reprompt(templates));
  return MotivationConfidence(scores.motivation, scores.confidence, at_utterance);
}

std::string_view to_string(Winner w) {
  switch (w) {
    case Winner::First: return "1";
    case Winner::Second: return "2";
    case Winner::Tie: return "tie";
  }
  return "tie";
}

Winner winner_from_string(std::string_view s) {
  if (s == "1") return Winner::First;
  if (s == "2") return Winner::Second;
  if (s == "tie") return Winner::Tie;
  throw Error(Errc::InvalidArgument, "unknown winner '" + std::string(s) + "'");
}

void to_json(Json& j, const WinRecord& w) {
  j = Json{{"schema_version", kSchemaVersion},
           {"conversation_a_id", w.conversation_a_id},
           {"conversation_b_id", w.conversation_b_id},
           {"winner", to_string(w.winner)},
           {"orders_run", w.orders_run}};
}

void from_json(const Json& j, WinRecord& w) {
  check_schema_version(j);
  w.conversation_a_id = j.at("conversation_a_id").get<std::string>();
  w.conversation_b_id = j.at("conversation_b_id").get<std::string>();
  w.winner = winner_from_string(j.at("winner").get<std::string>());
  w.orders_run = j.at("orders_run").get<int>();
  if (w.orders_run != 1 && w.orders_run != 2) throw Error(Errc::InvalidArgument, "orders_run must be 1 or 2");
  if (w.winner == Winner::Tie && w.orders_run != 2) {
    throw Error(Errc::InvalidArgument, "a tie requires both presentation orders");
  }
}

ParseOutcome<int> parse_pairwise_choice(std::string_view reply) {
  auto t = trim(reply);
  if (t == "1") return ParseOutcome<int>::ok(1);
  if (t == "2") return ParseOutcome<int>::ok(2);
  return ParseOutcome<int>::fail("reply must be exactly \"1\" or \"2\"");
}

WinRecord compare_pairwise(const SessionRecord& a, const SessionRecord& b, const ModelEndpoint& judge, bool debias,
                           const TemplateRegistry& templates) {
  if (a.utterances.empty() || b.utterances.empty()) {
    throw Error(Errc::Precondition, "pairwise comparison needs two non-empty conversations");
  }
  require_judge(judge);
  auto ask = [&](const SessionRecord& first, const SessionRecord& second) {
    auto request = judge.request(templates.render("pairwise_comparison",
                                                  {{"conversation_1", render_conversation(first.utterances)},
                                                   {"conversation_2", render_conversation(second.utterances)}}));
    return complete_with_reprompts<int>(*judge.backend, std::move(request), parse_pairwise_choice, kJudgeReprompts,
                                        reprompt(templates));
  };

  WinRecord record{a.id, b.id, Winner::Tie, debias ? 2 : 1};
  Winner first_order = ask(a, b) == 1 ? Winner::First : Winner::Second;
  if (!debias) {
    record.winner = first_order;
    return record;
  }
  // Swapped presentation: "1" now names b.
  Winner second_order = ask(b, a) == 1 ? Winner::Second : Winner::First;
  record.winner = first_order == second_order ? first_order : Winner::Tie;
  return record;
}

ParseOutcome<DeficiencyFlags> parse_deficiency_flags(std::string_view reply) {
  using Outcome = ParseOutcome<DeficiencyFlags>;
  auto j = extract_json_object(reply);
  if (!j) return Outcome::fail("no JSON object in reply");
  DeficiencyFlags flags;
  const std::array<std::pair<const char*, bool*>, 3> fields{{{"lack_of_empathy", &flags.lack_of_empathy},
                                                             {"inappropriate_strategy_use",
                                                              &flags.inappropriate_strategy_use},
                                                             {"unclear_expression", &flags.unclear_expression}}};
  for (const auto& [key, target] : fields) {
    auto it = j->find(key);
    if (it == j->end() || !it->is_boolean()) return Outcome::fail(std::string("\"") + key + "\" must be true or false");
    *target = it->get<bool>();
  }
  return Outcome::ok(flags);
}

DeficiencyFlags flag_deficiencies(const SessionRecord& session, const ModelEndpoint& judge,
                                  const TemplateRegistry& templates) {
  if (session.utterances.empty()) throw Error(Errc::Precondition, "session has no utterances");
  require_judge(judge);
  auto request = judge.request(
      templates.render("deficiency_flags", {{"conversation", render_conversation(session.utterances)}}));
  return complete_with_reprompts<DeficiencyFlags>(*judge.backend, std::move(request), parse_deficiency_flags,
                                                  kJudgeReprompts, reprompt(templates));
}

}  // namespace therasim
