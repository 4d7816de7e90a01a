#include "therasim/core/types.hpp"

#include <cmath>

#include "therasim/core/error.hpp"

namespace therasim {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Precondition: return "Precondition";
    case Errc::UnknownStrategy: return "UnknownStrategy";
    case Errc::UnboundPlaceholder: return "UnboundPlaceholder";
    case Errc::UnknownTemplate: return "UnknownTemplate";
    case Errc::Transport: return "Transport";
    case Errc::BadResponse: return "BadResponse";
    case Errc::BadCredential: return "BadCredential";
    case Errc::Exhausted: return "Exhausted";
    case Errc::ScriptMismatch: return "ScriptMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MalformedAfterRetries: return "MalformedAfterRetries";
    case Errc::IncompletePermutation: return "IncompletePermutation";
    case Errc::TooFewDistinct: return "TooFewDistinct";
    case Errc::NoFooter: return "NoFooter";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::Corruption: return "Corruption";
    case Errc::Io: return "Io";
    case Errc::NotFound: return "NotFound";
    case Errc::Conflict: return "Conflict";
  }
  return "Unknown";
}

void check_schema_version(const Json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "record is not a JSON object");
  auto it = j.find("schema_version");
  if (it == j.end()) return;
  if (!it->is_number_integer()) throw Error(Errc::SchemaMismatch, "schema_version is not an integer");
  auto v = it->get<int>();
  if (v > kSchemaVersion || v < 1) {
    throw Error(Errc::SchemaMismatch,
                "record schema_version " + std::to_string(v) + ", supported " + std::to_string(kSchemaVersion));
  }
}

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "Easy";
    case Difficulty::Medium: return "Medium";
    case Difficulty::Hard: return "Hard";
  }
  return "Easy";
}

Difficulty difficulty_from_string(std::string_view s) {
  if (s == "Easy" || s == "easy") return Difficulty::Easy;
  if (s == "Medium" || s == "medium") return Difficulty::Medium;
  if (s == "Hard" || s == "hard") return Difficulty::Hard;
  throw Error(Errc::InvalidArgument, "unknown difficulty '" + std::string(s) + "'");
}

std::string render_profile(const PatientProfile& p) {
  std::string out;
  auto field = [&out](std::string_view label, const std::optional<std::string>& v) {
    out += label;
    out += ": ";
    out += v ? *v : std::string("not mentioned");
    out += '\n';
  };
  field("Personality Traits", p.personality_traits);
  field("Substance Use History", p.substance_use_history);
  field("Significant Life Events", p.significant_life_events);
  field("Behavioral Themes", p.behavioral_themes);
  field("Motivations for Substance Use", p.motivations);
  return out;
}

bool has_narrative(const PatientProfile& p) {
  return p.personality_traits || p.substance_use_history || p.significant_life_events || p.behavioral_themes ||
         p.motivations;
}

std::string_view to_string(Role r) { return r == Role::Patient ? "patient" : "therapist"; }

Role role_from_string(std::string_view s) {
  if (s == "patient") return Role::Patient;
  if (s == "therapist") return Role::Therapist;
  throw Error(Errc::InvalidArgument, "unknown role '" + std::string(s) + "'");
}

std::string render_transcript(const std::vector<Utterance>& utterances) {
  std::string out;
  for (const auto& u : utterances) {
    out += u.role == Role::Patient ? "Patient: " : "Therapist: ";
    out += u.text;
    out += '\n';
  }
  return out;
}

StrategyCounts count_strategies(const std::vector<Utterance>& utterances) {
  StrategyCounts counts;
  for (const auto& u : utterances) {
    if (u.role != Role::Therapist) continue;
    for (const auto& s : u.strategies) ++counts[s];
  }
  return counts;
}

std::size_t unique_strategy_count(const StrategyCounts& counts) {
  std::size_t n = 0;
  for (const auto& [ref, c] : counts) n += c > 0 ? 1 : 0;
  return n;
}

std::string_view to_string(EventCategory c) {
  switch (c) {
    case EventCategory::JobLoss: return "job_loss";
    case EventCategory::RelationshipBreakdown: return "relationship_breakdown";
    case EventCategory::PeerPressure: return "peer_pressure";
    case EventCategory::Stressor: return "stressor";
    case EventCategory::Other: return "other";
  }
  return "other";
}

EventCategory event_category_from_string(std::string_view s) {
  if (s == "job_loss") return EventCategory::JobLoss;
  if (s == "relationship_breakdown") return EventCategory::RelationshipBreakdown;
  if (s == "peer_pressure") return EventCategory::PeerPressure;
  if (s == "stressor") return EventCategory::Stressor;
  if (s == "other") return EventCategory::Other;
  throw Error(Errc::InvalidArgument, "unknown event category '" + std::string(s) + "'");
}

std::string_view to_string(Termination::Kind k) {
  switch (k) {
    case Termination::Kind::Resolved: return "Resolved";
    case Termination::Kind::MaxTurns: return "MaxTurns";
    case Termination::Kind::Error: return "Error";
  }
  return "Error";
}

bool in_score_range(double v) { return std::isfinite(v) && v >= 1.0 && v <= 5.0; }

namespace {

void require_score(double v, std::string_view name) {
  if (!in_score_range(v)) {
    throw Error(Errc::InvalidArgument, std::string(name) + " outside [1, 5]: " + std::to_string(v));
  }
}

template <typename T>
T require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(Errc::InvalidArgument, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("field '") + key + "': " + e.what());
  }
}

std::optional<std::string> optional_text(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(Errc::InvalidArgument, std::string("field '") + key + "' must be text or null");
  return it->get<std::string>();
}

Json optional_to_json(const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

ScoreCard::ScoreCard(double r, double e, double p, double c, double b) : values_{r, e, p, c, b} {
  for (std::size_t i = 0; i < values_.size(); ++i) require_score(values_[i], dimension_names()[i]);
}

const std::array<std::string_view, 5>& ScoreCard::dimension_names() {
  static const std::array<std::string_view, 5> names{"Responsiveness", "Empathy",
                                                     "Persuasive Strategy Appropriateness", "Clinical Relevance",
                                                     "Behavioral Realism"};
  return names;
}

MotivationConfidence::MotivationConfidence(double motivation, double confidence, std::size_t at_utterance)
    : motivation_(motivation), confidence_(confidence), at_utterance_(at_utterance) {
  require_score(motivation, "motivation");
  require_score(confidence, "confidence");
}

std::string_view to_string(Provenance::Kind k) {
  switch (k) {
    case Provenance::Kind::JudgeRanking: return "judge_ranking";
    case Provenance::Kind::HumanAnnotation: return "human_annotation";
    case Provenance::Kind::Rewrite: return "rewrite";
  }
  return "judge_ranking";
}

PreferencePair make_preference_pair(std::vector<Utterance> context, std::string chosen, std::string rejected,
                                    Provenance provenance, std::optional<std::string> rationale) {
  if (chosen == rejected) throw Error(Errc::InvalidArgument, "preference pair has chosen == rejected");
  if (provenance.record_id.empty()) throw Error(Errc::InvalidArgument, "preference pair provenance has no record id");
  return PreferencePair{std::move(context), std::move(chosen), std::move(rejected), std::move(provenance),
                        std::move(rationale)};
}

void to_json(Json& j, const PatientProfile& p) {
  j = Json{{"schema_version", kSchemaVersion},
           {"id", p.id},
           {"personality_traits", optional_to_json(p.personality_traits)},
           {"substance_use_history", optional_to_json(p.substance_use_history)},
           {"significant_life_events", optional_to_json(p.significant_life_events)},
           {"behavioral_themes", optional_to_json(p.behavioral_themes)},
           {"motivations", optional_to_json(p.motivations)},
           {"difficulty", to_string(p.difficulty)}};
}

void from_json(const Json& j, PatientProfile& p) {
  check_schema_version(j);
  p.id = require<std::string>(j, "id");
  p.personality_traits = optional_text(j, "personality_traits");
  p.substance_use_history = optional_text(j, "substance_use_history");
  p.significant_life_events = optional_text(j, "significant_life_events");
  p.behavioral_themes = optional_text(j, "behavioral_themes");
  p.motivations = optional_text(j, "motivations");
  p.difficulty = difficulty_from_string(require<std::string>(j, "difficulty"));
  if (!has_narrative(p)) throw Error(Errc::InvalidArgument, "profile " + p.id + " has no narrative fields");
}

void to_json(Json& j, const Utterance& u) {
  j = Json{{"role", to_string(u.role)}, {"text", u.text}, {"index", u.index}, {"strategies", u.strategies}};
}

void from_json(const Json& j, Utterance& u) {
  u.role = role_from_string(require<std::string>(j, "role"));
  u.text = require<std::string>(j, "text");
  u.index = require<std::size_t>(j, "index");
  u.strategies.clear();
  if (auto it = j.find("strategies"); it != j.end()) {
    for (const auto& s : *it) u.strategies.push_back(s.get<StrategyRef>());
  }
}

void to_json(Json& j, const EnvironmentEvent& e) {
  j = Json{{"category", to_string(e.category)},
           {"description", e.description},
           {"injected_at_turn", e.injected_at_turn}};
  if (e.category == EventCategory::Other) j["other_label"] = e.other_label;
}

void from_json(const Json& j, EnvironmentEvent& e) {
  e.category = event_category_from_string(require<std::string>(j, "category"));
  e.description = require<std::string>(j, "description");
  e.injected_at_turn = require<std::size_t>(j, "injected_at_turn");
  e.other_label = j.value("other_label", std::string());
}

void to_json(Json& j, const Termination& t) {
  j = Json{{"kind", to_string(t.kind)}};
  if (t.kind == Termination::Kind::Error) j["reason"] = t.reason;
}

void from_json(const Json& j, Termination& t) {
  auto kind = require<std::string>(j, "kind");
  if (kind == "Resolved") {
    t.kind = Termination::Kind::Resolved;
  } else if (kind == "MaxTurns") {
    t.kind = Termination::Kind::MaxTurns;
  } else if (kind == "Error") {
    t.kind = Termination::Kind::Error;
  } else {
    throw Error(Errc::InvalidArgument, "unknown termination kind '" + kind + "'");
  }
  t.reason = j.value("reason", std::string());
}

Json counts_to_json(const StrategyCounts& counts) {
  Json j = Json::object();
  for (const auto& [ref, n] : counts) j[ref.key()] = n;
  return j;
}

StrategyCounts counts_from_json(const Json& j) {
  StrategyCounts counts;
  for (const auto& [key, n] : j.items()) {
    auto ref = strategy_from_key(key);
    if (!ref) throw Error(Errc::UnknownStrategy, "unknown strategy key '" + key + "'");
    counts[*ref] = n.get<int>();
  }
  return counts;
}

void to_json(Json& j, const SessionRecord& s) {
  j = Json{{"schema_version", kSchemaVersion},
           {"id", s.id},
           {"profile_id", s.profile_id},
           {"model", s.model},
           {"difficulty", to_string(s.difficulty)},
           {"utterances", s.utterances},
           {"events", s.events},
           {"strategy_counts", counts_to_json(s.strategy_counts)},
           {"termination", s.termination},
           {"seed", s.seed},
           {"warnings", s.warnings}};
}

void from_json(const Json& j, SessionRecord& s) {
  check_schema_version(j);
  s.id = require<std::string>(j, "id");
  s.profile_id = require<std::string>(j, "profile_id");
  s.model = j.value("model", std::string());
  s.difficulty = difficulty_from_string(require<std::string>(j, "difficulty"));
  s.utterances = require<std::vector<Utterance>>(j, "utterances");
  s.events = j.value("events", std::vector<EnvironmentEvent>{});
  s.strategy_counts = counts_from_json(j.value("strategy_counts", Json::object()));
  s.termination = require<Termination>(j, "termination");
  s.seed = require<std::uint64_t>(j, "seed");
  s.warnings = j.value("warnings", std::vector<std::string>{});
}

void to_json(Json& j, const ScoreCard& s) {
  j = Json::object();
  const auto& names = ScoreCard::dimension_names();
  for (std::size_t i = 0; i < names.size(); ++i) j[std::string(names[i])] = s.values()[i];
}

ScoreCard score_card_from_json(const Json& j) {
  const auto& names = ScoreCard::dimension_names();
  std::array<double, 5> v{};
  for (std::size_t i = 0; i < names.size(); ++i) v[i] = require<double>(j, std::string(names[i]).c_str());
  return ScoreCard(v[0], v[1], v[2], v[3], v[4]);
}

void to_json(Json& j, const MotivationConfidence& m) {
  j = Json{{"motivation", m.motivation()}, {"confidence", m.confidence()}, {"at_utterance", m.at_utterance()}};
}

MotivationConfidence motivation_confidence_from_json(const Json& j) {
  return MotivationConfidence(require<double>(j, "motivation"), require<double>(j, "confidence"),
                              require<std::size_t>(j, "at_utterance"));
}

void to_json(Json& j, const Provenance& p) { j = Json{{"kind", to_string(p.kind)}, {"record_id", p.record_id}}; }

void from_json(const Json& j, Provenance& p) {
  auto kind = require<std::string>(j, "kind");
  if (kind == "judge_ranking") {
    p.kind = Provenance::Kind::JudgeRanking;
  } else if (kind == "human_annotation") {
    p.kind = Provenance::Kind::HumanAnnotation;
  } else if (kind == "rewrite") {
    p.kind = Provenance::Kind::Rewrite;
  } else {
    throw Error(Errc::InvalidArgument, "unknown provenance kind '" + kind + "'");
  }
  p.record_id = require<std::string>(j, "record_id");
}

void to_json(Json& j, const PreferencePair& p) {
  j = Json{{"schema_version", kSchemaVersion},
           {"context", p.context},
           {"chosen", p.chosen},
           {"rejected", p.rejected},
           {"provenance", p.provenance},
           {"rationale", optional_to_json(p.rationale)}};
}

void from_json(const Json& j, PreferencePair& p) {
  check_schema_version(j);
  p = make_preference_pair(require<std::vector<Utterance>>(j, "context"), require<std::string>(j, "chosen"),
                           require<std::string>(j, "rejected"), require<Provenance>(j, "provenance"),
                           optional_text(j, "rationale"));
}

}  // namespace therasim

therasim::StrategyRef nlohmann::adl_serializer<therasim::StrategyRef>::from_json(const nlohmann::json& j) {
  using therasim::Errc;
  if (!j.is_string()) throw therasim::Error(Errc::InvalidArgument, "strategy reference must be a string");
  auto key = j.get<std::string>();
  auto ref = therasim::strategy_from_key(key);
  if (!ref) throw therasim::Error(Errc::UnknownStrategy, "unknown strategy key '" + key + "'");
  return *ref;
}

void nlohmann::adl_serializer<therasim::StrategyRef>::to_json(nlohmann::json& j, const therasim::StrategyRef& s) {
  j = s.key();
}
