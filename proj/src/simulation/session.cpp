#include <algorithm>
#include <exception>

#include "therasim/core/json_text.hpp"
#include "therasim/core/validate.hpp"
#include "therasim/evaluation/judge.hpp"
#include "therasim/simulation/session.hpp"

namespace therasim {
namespace {

std::string excerpt(std::string_view text, std::size_t limit) {
  if (text.size() <= limit) return std::string(text);
  auto cut = text.substr(0, limit);
  // Back off to a UTF-8 boundary.
  while (!cut.empty() && (static_cast<unsigned char>(cut.back()) & 0xC0) == 0x80) cut.remove_suffix(1);
  if (!cut.empty() && static_cast<unsigned char>(cut.back()) >= 0xC0) cut.remove_suffix(1);
  return std::string(cut) + "...";
}

// Memory entries recorded after a therapist turn.
void remember_therapist_turn(PatientMemory& memory, const Utterance& u) {
  std::string used;
  for (const auto& s : u.strategies) {
    if (!s.is_framework()) continue;
    if (!used.empty()) used += ", ";
    used += s.display_name();
  }
  auto text = "The therapist said: \"" + excerpt(u.text, 200) + "\"";
  if (!used.empty()) text += " (approach: " + used + ")";
  memory.append({MemoryKind::Interaction, std::move(text), u.index});
  for (const auto& s : u.strategies) {
    if (s.is_framework()) continue;
    memory.append({MemoryKind::CopingMechanism, "Suggested coping step: " + std::string(s.description()), u.index});
  }
}

ModelEndpoint with_temperature(ModelEndpoint e, double t) {
  e.temperature = t;
  return e;
}

}  // namespace

SessionDriver::SessionDriver(PatientProfile profile, SessionConfig config, SessionBackends backends,
                             const TemplateRegistry& templates, std::string session_id)
    : profile_(std::move(profile)), config_(std::move(config)), backends_(std::move(backends)), templates_(&templates) {
  config_.validate();
  if (profile_.id.empty()) throw Error(Errc::Precondition, "profile has no id");
  backends_.patient = with_temperature(backends_.patient, config_.generation_temperature);
  backends_.therapist = with_temperature(backends_.therapist, config_.generation_temperature);

  record_.seed = derive_session_seed(config_.seed, profile_.id);
  record_.profile_id = profile_.id;
  record_.difficulty = profile_.difficulty;
  record_.model = backends_.therapist.model_id;
  record_.id = session_id.empty() ? session_content_id(profile_.id, record_.model, record_.seed) : std::move(session_id);
  rng_.seed(record_.seed);
}

SessionDriver SessionDriver::resume(PatientProfile profile, SessionConfig config, SessionBackends backends,
                                    SessionRecord record, bool open, const TemplateRegistry& templates) {
  SessionDriver d(std::move(profile), std::move(config), std::move(backends), templates, record.id);
  if (record.profile_id != d.profile_.id) throw Error(Errc::Precondition, "record belongs to another profile");
  d.record_.seed = record.seed;
  d.rng_.seed(record.seed);
  // Replay: the rng is consumed exactly as the live loop consumed it, which
  // also reproduces the events; memory is rebuilt alongside.
  std::vector<Utterance> utterances = std::move(record.utterances);
  auto kept_warnings = std::move(record.warnings);
  auto kept_model = record.model;
  for (const auto& u : utterances) {
    if (u.role == Role::Patient) d.before_patient_turn();
    d.record_.utterances.push_back(u);
    if (u.role == Role::Therapist) {
      for (const auto& s : u.strategies) ++d.record_.strategy_counts[s];
      remember_therapist_turn(d.memory_, u);
    }
  }
  if (d.record_.events != record.events) throw Error(Errc::Corruption, "stored events do not replay from the seed");
  d.record_.warnings = std::move(kept_warnings);
  d.record_.model = std::move(kept_model);
  if (open) {
    d.finished_ = d.record_.utterances.size() >= d.config_.max_utterances;
    if (d.finished_) d.record_.termination = Termination{Termination::Kind::MaxTurns, {}};
  } else {
    d.record_.termination = record.termination;
    d.finished_ = true;
  }
  return d;
}

Role SessionDriver::next_role() const noexcept {
  return record_.utterances.empty() || record_.utterances.back().role == Role::Therapist ? Role::Patient
                                                                                         : Role::Therapist;
}

void SessionDriver::ensure_open(Role role) const {
  if (finished_) {
    throw Error(Errc::Conflict, std::string("session is closed (") + std::string(to_string(record_.termination.kind)) +
                                    ")");
  }
  if (record_.utterances.size() >= config_.max_utterances) throw Error(Errc::Conflict, "session is at the utterance cap");
  if (role != next_role()) {
    throw Error(Errc::Precondition, std::string("expected a ") + std::string(to_string(next_role())) + " utterance");
  }
}

void SessionDriver::before_patient_turn() {
  auto index = record_.utterances.size();
  if (prepared_for_ == index) return;
  prepared_for_ = index;
  auto patient_turn_number = index / 2 + 1;
  if (auto event = maybe_inject_event(memory_, patient_turn_number, index, config_, rng_)) {
    record_.events.push_back(std::move(*event));
  }
}

const Utterance& SessionDriver::append(Utterance u, std::vector<std::string> warnings) {
  u.index = record_.utterances.size();
  if (u.role == Role::Patient) u.strategies.clear();
  for (const auto& s : u.strategies) ++record_.strategy_counts[s];
  record_.utterances.push_back(std::move(u));
  for (auto& w : warnings) record_.warnings.push_back("utterance " + std::to_string(record_.utterances.size() - 1) + ": " + w);
  const auto& stored = record_.utterances.back();
  if (stored.role == Role::Therapist) remember_therapist_turn(memory_, stored);
  after_append();
  return record_.utterances.back();
}

void SessionDriver::after_append() {
  std::vector<std::string> warnings;
  std::optional<MotivationConfidence> scored;
  auto decision = detect_termination(record_.utterances, config_, backends_.judge, *templates_, &warnings, &scored);
  for (auto& w : warnings) record_.warnings.push_back(std::move(w));
  if (scored) {
    memory_.append({MemoryKind::EmotionalState,
                    "Motivation " + std::to_string(scored->motivation()).substr(0, 4) + ", confidence " +
                        std::to_string(scored->confidence()).substr(0, 4),
                    scored->at_utterance()});
  }
  if (decision == TerminationDecision::Continue) return;
  finished_ = true;
  record_.termination.kind = decision == TerminationDecision::Resolved ? Termination::Kind::Resolved
                                                                       : Termination::Kind::MaxTurns;
  record_.termination.reason.clear();
}

const Utterance& SessionDriver::patient_step() {
  ensure_open(Role::Patient);
  before_patient_turn();
  auto u = patient_turn(profile_, memory_, record_.utterances, backends_.patient, *templates_, config_.memory_window);
  return append(std::move(u), {});
}

const Utterance& SessionDriver::therapist_step() {
  ensure_open(Role::Therapist);
  auto usage = record_.strategy_counts;
  auto turn = therapist_turn(record_.utterances, usage, backends_.therapist, backends_.attribution, *templates_);
  return append(std::move(turn.utterance), std::move(turn.warnings));
}

const Utterance& SessionDriver::human_step(Role role, std::string text) {
  ensure_open(role);
  auto trimmed = std::string(trim(text));
  if (trimmed.empty()) throw Error(Errc::InvalidArgument, "utterance text is empty");
  if (role == Role::Patient) before_patient_turn();
  return append(Utterance{role, std::move(trimmed), 0, {}}, {});
}

void SessionDriver::fail(std::string reason) {
  finished_ = true;
  record_.termination = Termination{Termination::Kind::Error, std::move(reason)};
}

void SessionDriver::close(std::string reason) {
  if (finished_) return;
  finished_ = true;
  const auto& u = record_.utterances;
  auto last_patient = std::find_if(u.rbegin(), u.rend(), [](const Utterance& x) { return x.role == Role::Patient; });
  if (last_patient != u.rend() && matches_farewell(last_patient->text, config_.farewell_lexicon)) {
    record_.termination = Termination{Termination::Kind::Resolved, {}};
  } else {
    record_.termination = Termination{Termination::Kind::Error, "closed: " + (reason.empty() ? "by request" : reason)};
  }
}

SessionRecord SessionDriver::run() {
  try {
    while (!finished_) {
      if (next_role() == Role::Patient) {
        patient_step();
      } else {
        therapist_step();
      }
    }
  } catch (const Error& e) {
    fail(e.what());
  } catch (const std::exception& e) {
    fail(std::string("unexpected: ") + e.what());
  }
  auto violations = validate_session(record_, config_.max_utterances);
  if (!violations.empty()) {
    throw Error(Errc::Precondition, "session " + record_.id + " failed validation: " + violations.front().detail);
  }
  return record_;
}

SessionRecord run_session(const PatientProfile& profile, const SessionConfig& config, const SessionBackends& backends,
                          const TemplateRegistry& templates) {
  return SessionDriver(profile, config, backends, templates).run();
}

}  // namespace therasim
