#include <algorithm>
#include <cctype>

#include "therasim/core/hash.hpp"
#include "therasim/core/json_text.hpp"
#include "therasim/datasets/footer.hpp"
#include "therasim/evaluation/judge.hpp"
#include "therasim/simulation/session.hpp"

namespace therasim {
namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Lowercases, folds typographic apostrophes and turns every non-alphanumeric
// run into a single space, padded at both ends for whole-word search.
std::string fold_for_match(std::string_view text) {
  std::string s(text);
  for (std::string_view curly : {"\xE2\x80\x99", "\xE2\x80\x98"}) {
    for (auto pos = s.find(curly); pos != std::string::npos; pos = s.find(curly, pos + 1)) {
      s.replace(pos, curly.size(), "'");
    }
  }
  std::string out = " ";
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '\'') {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (out.back() != ' ') {
      out.push_back(' ');
    }
  }
  if (out.back() != ' ') out.push_back(' ');
  return out;
}

// Removes a leading speaker tag the model may echo ("Therapist:", "**Doctor:**").
std::string strip_speaker(std::string_view text, std::initializer_list<std::string_view> speakers) {
  auto t = trim(text);
  auto l = lowercase(t.substr(0, 24));
  for (auto speaker : speakers) {
    for (const std::string& tag : {"**" + std::string(speaker) + ":**", std::string(speaker) + ":"}) {
      if (l.starts_with(tag)) return std::string(trim(t.substr(tag.size())));
    }
  }
  return std::string(t);
}

std::string_view difficulty_key(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "difficulty_easy";
    case Difficulty::Medium: return "difficulty_medium";
    case Difficulty::Hard: return "difficulty_hard";
  }
  return "difficulty_easy";
}

}  // namespace

std::string_view to_string(MemoryKind k) {
  switch (k) {
    case MemoryKind::Interaction: return "interaction";
    case MemoryKind::EmotionalState: return "emotional_state";
    case MemoryKind::CopingMechanism: return "coping_mechanism";
    case MemoryKind::EnvironmentalInfluence: return "environmental_influence";
  }
  return "interaction";
}

MemoryKind memory_kind_from_string(std::string_view s) {
  for (auto k : {MemoryKind::Interaction, MemoryKind::EmotionalState, MemoryKind::CopingMechanism,
                 MemoryKind::EnvironmentalInfluence}) {
    if (to_string(k) == s) return k;
  }
  throw Error(Errc::InvalidArgument, "unknown memory kind '" + std::string(s) + "'");
}

void PatientMemory::append(MemoryEntry entry) {
  if (!entries_.empty() && entry.turn_index < entries_.back().turn_index) {
    throw Error(Errc::Precondition, "memory turn index went backwards");
  }
  entries_.push_back(std::move(entry));
}

std::string PatientMemory::render_recent(std::size_t window) const {
  if (entries_.empty() || window == 0) return {};
  std::string out = "Recent memory:\n";
  auto first = entries_.size() > window ? entries_.size() - window : 0;
  for (auto i = first; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    out += "- [";
    out += to_string(e.kind);
    out += ", utterance ";
    out += std::to_string(e.turn_index);
    out += "] ";
    out += e.text;
    out += '\n';
  }
  return out;
}

const std::vector<std::string>& default_farewell_lexicon() {
  static const std::vector<std::string> lexicon{
      "goodbye",          "good bye",           "bye",
      "farewell",         "see you next",       "talk to you next",
      "until next time",  "looking forward to our next",
      "i feel ready",     "thank you for your help",
      "thanks for your help", "take care"};
  return lexicon;
}

void SessionConfig::validate() const {
  if (max_utterances < 2 || max_utterances % 2 != 0) {
    throw Error(Errc::InvalidArgument, "max_utterances must be even and at least 2");
  }
  if (event_period_k == 0) throw Error(Errc::InvalidArgument, "event_period_k must be at least 1");
  if (!(event_probability >= 0.0 && event_probability <= 1.0)) {
    throw Error(Errc::InvalidArgument, "event_probability must be within [0, 1]");
  }
  if (!in_score_range(resolution_threshold)) {
    throw Error(Errc::InvalidArgument, "resolution_threshold must be within [1, 5]");
  }
  if (!(generation_temperature >= 0.0 && generation_temperature <= 2.0)) {
    throw Error(Errc::InvalidArgument, "generation_temperature must be within [0, 2]");
  }
  if (farewell_lexicon.empty()) throw Error(Errc::InvalidArgument, "farewell lexicon is empty");
}

void to_json(Json& j, const SessionConfig& c) {
  j = Json{{"max_utterances", c.max_utterances},
           {"event_period_k", c.event_period_k},
           {"event_probability", c.event_probability},
           {"seed", c.seed},
           {"resolution_threshold", c.resolution_threshold},
           {"generation_temperature", c.generation_temperature},
           {"environment_enabled", c.environment_enabled},
           {"judge_enabled", c.judge_enabled},
           {"memory_window", c.memory_window},
           {"farewell_lexicon", c.farewell_lexicon}};
}

void from_json(const Json& j, SessionConfig& c) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "simulate config must be an object");
  try {
    c.max_utterances = j.value("max_utterances", c.max_utterances);
    c.event_period_k = j.value("event_period_k", c.event_period_k);
    c.event_probability = j.value("event_probability", c.event_probability);
    c.seed = j.value("seed", c.seed);
    c.resolution_threshold = j.value("resolution_threshold", c.resolution_threshold);
    c.generation_temperature = j.value("generation_temperature", c.generation_temperature);
    c.environment_enabled = j.value("environment_enabled", c.environment_enabled);
    c.judge_enabled = j.value("judge_enabled", c.judge_enabled);
    c.memory_window = j.value("memory_window", c.memory_window);
    c.farewell_lexicon = j.value("farewell_lexicon", c.farewell_lexicon);
  } catch (const Json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad simulate config: ") + e.what());
  }
  c.validate();
}

std::uint64_t derive_session_seed(std::uint64_t run_seed, std::string_view profile_id) {
  auto digest = sha256_hex(std::to_string(run_seed) + ":" + std::string(profile_id));
  return std::stoull(digest.substr(0, 16), nullptr, 16);
}

std::string session_content_id(std::string_view profile_id, std::string_view model, std::uint64_t seed) {
  return content_id("s-", std::string(profile_id) + ":" + std::string(model) + ":" + std::to_string(seed));
}

std::string render_analysis(const PatientProfile& profile, const PatientMemory& memory, std::size_t window) {
  auto out = render_profile(profile);
  auto recent = memory.render_recent(window);
  if (!recent.empty()) {
    out += '\n';
    out += recent;
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string render_usage_counts(const StrategyCounts& usage, const TemplateRegistry& templates) {
  std::string out;
  for (const auto& f : frameworks()) {
    auto ref = StrategyRef::framework(f.id);
    auto it = usage.find(ref);
    int count = it == usage.end() ? 0 : it->second;
    if (!out.empty()) out += '\n';
    out += templates.render("strategy_usage_line",
                            {{"strategy_name", ref.display_name()}, {"count", std::to_string(count)}});
  }
  return out;
}

std::string render_framework_catalog() {
  std::string out;
  for (const auto& f : frameworks()) {
    if (!out.empty()) out += '\n';
    out += StrategyRef::framework(f.id).display_name();
    out += ": ";
    out += f.description;
  }
  return out;
}

std::string render_actionable_catalog() {
  std::string out;
  for (const auto& a : actionable_strategies()) {
    if (!out.empty()) out += '\n';
    out += std::to_string(a.id);
    out += ". ";
    out += a.description;
  }
  return out;
}

Utterance patient_turn(const PatientProfile& profile, const PatientMemory& memory,
                       const std::vector<Utterance>& history, const ModelEndpoint& patient,
                       const TemplateRegistry& templates, std::size_t memory_window) {
  if (!history.empty() && history.back().role != Role::Therapist) {
    throw Error(Errc::Precondition, "patient turn must follow a therapist turn");
  }
  if (!patient) throw Error(Errc::Precondition, "patient endpoint has no backend");
  auto prompt = templates.render(
      "simulation_patient",
      {{"analysis", render_analysis(profile, memory, memory_window)},
       {"history", render_conversation(history)},
       {"difficulty description", templates.get(difficulty_key(profile.difficulty)).body}});
  auto text = strip_speaker(patient.ask(std::move(prompt)), {"patient"});
  if (text.empty()) throw Error(Errc::BadResponse, "patient backend returned an empty reply");
  return Utterance{Role::Patient, std::move(text), history.size(), {}};
}

std::string render_therapist_prompt(const std::vector<Utterance>& history, const StrategyCounts& usage,
                                    const TemplateRegistry& templates) {
  auto block = templates.render("therapist_strategy_block", {{"frameworks", render_framework_catalog()},
                                                             {"usage_counts", render_usage_counts(usage, templates)},
                                                             {"actionable_strategies", render_actionable_catalog()}});
  return templates.render("simulation_therapist", {{"strategy", block}, {"history", render_conversation(history)}});
}

ParseOutcome<AttributionResult> parse_attribution(std::string_view reply) {
  using Outcome = ParseOutcome<AttributionResult>;
  auto j = extract_json_object(reply);
  if (!j) return Outcome::fail("no JSON object in reply");
  auto it = j->find("strategies");
  if (it == j->end() || !it->is_array()) return Outcome::fail("missing \"strategies\" array");
  AttributionResult result;
  for (const auto& item : *it) {
    if (!item.is_string()) return Outcome::fail("\"strategies\" entries must be strings");
    const auto& name = item.get_ref<const std::string&>();
    auto ref = try_canonicalize_strategy(name);
    if (!ref) {
      result.unknown.push_back(name);
    } else if (std::find(result.strategies.begin(), result.strategies.end(), *ref) == result.strategies.end()) {
      result.strategies.push_back(*ref);
    }
  }
  return Outcome::ok(std::move(result));
}

TherapistTurn therapist_turn(const std::vector<Utterance>& history, StrategyCounts& usage,
                             const ModelEndpoint& therapist, const ModelEndpoint& attribution,
                             const TemplateRegistry& templates) {
  if (history.empty() || history.back().role != Role::Patient) {
    throw Error(Errc::Precondition, "therapist turn must follow a patient turn");
  }
  if (!therapist) throw Error(Errc::Precondition, "therapist endpoint has no backend");
  auto reply = therapist.ask(render_therapist_prompt(history, usage, templates));

  TherapistTurn turn;
  turn.utterance.role = Role::Therapist;
  turn.utterance.index = history.size();
  if (auto footer = find_strategy_footer(reply)) {
    turn.from_footer = true;
    turn.utterance.strategies = footer->strategies;
    turn.warnings = footer->warnings;
    turn.utterance.text = strip_speaker(strip_strategy_footer(reply), {"therapist", "doctor"});
  } else {
    turn.utterance.text = strip_speaker(reply, {"therapist", "doctor"});
  }
  if (turn.utterance.text.empty()) throw Error(Errc::BadResponse, "therapist backend returned an empty reply");

  if (!turn.from_footer) {
    if (!attribution) {
      turn.warnings.push_back("no strategy footer and no attribution backend; strategies left empty");
    } else {
      try {
        Bindings b{{"catalog", render_framework_catalog() + "\n\nActionable strategies:\n" + render_actionable_catalog()},
                   {"reply", turn.utterance.text}};
        auto request = attribution.request(templates.render("strategy_attribution", b));
        auto result = complete_with_reprompts<AttributionResult>(*attribution.backend, std::move(request),
                                                                 parse_attribution, kJudgeReprompts,
                                                                 templates.get("reprompt_format").body);
        for (const auto& name : result.unknown) turn.warnings.push_back("attribution named unknown strategy '" + name + "'");
        turn.utterance.strategies = std::move(result.strategies);
        if (turn.utterance.strategies.empty()) turn.warnings.push_back("attribution found no strategies");
      } catch (const Error& e) {
        turn.warnings.push_back(std::string("strategy attribution failed: ") + e.what());
      }
    }
  }
  for (const auto& s : turn.utterance.strategies) ++usage[s];
  return turn;
}

std::string_view to_string(TerminationDecision d) {
  switch (d) {
    case TerminationDecision::Continue: return "continue";
    case TerminationDecision::Resolved: return "resolved";
    case TerminationDecision::MaxTurns: return "max_turns";
  }
  return "continue";
}

bool matches_farewell(std::string_view text, const std::vector<std::string>& lexicon) {
  auto folded = fold_for_match(text);
  for (const auto& phrase : lexicon) {
    auto needle = fold_for_match(phrase);
    if (needle.size() > 2 && folded.find(needle) != std::string::npos) return true;
  }
  return false;
}

TerminationDecision detect_termination(const std::vector<Utterance>& history, const SessionConfig& config,
                                       const ModelEndpoint& judge, const TemplateRegistry& templates,
                                       std::vector<std::string>* warnings,
                                       std::optional<MotivationConfidence>* scored) {
  if (history.empty()) throw Error(Errc::Precondition, "termination check on an empty history");
  const auto cap = history.size() >= config.max_utterances ? TerminationDecision::MaxTurns : TerminationDecision::Continue;
  // Resolution is judged once per exchange, after the therapist has answered
  // the patient's farewell.
  if (history.size() < 2 || history.back().role != Role::Therapist) return cap;
  const auto& patient = history[history.size() - 2];
  if (patient.role != Role::Patient || !matches_farewell(patient.text, config.farewell_lexicon)) return cap;
  if (!config.judge_enabled) return TerminationDecision::Resolved;
  if (!judge) {
    if (warnings) warnings->push_back("judge enabled but no judge backend; resolution decided by lexicon only");
    return TerminationDecision::Resolved;
  }
  try {
    auto state = score_state(history, history.size() - 1, judge, templates);
    if (scored) *scored = state;
    bool confident = state.motivation() >= config.resolution_threshold &&
                     state.confidence() >= config.resolution_threshold;
    return confident ? TerminationDecision::Resolved : cap;
  } catch (const Error& e) {
    if (warnings) warnings->push_back(std::string("state judge failed; resolution decided by lexicon only: ") + e.what());
    return TerminationDecision::Resolved;
  }
}

}  // namespace therasim
