#include "therasim/core/validate.hpp"

namespace therasim {

std::string_view to_string(ViolationKind v) {
  switch (v) {
    case ViolationKind::LengthExceeded: return "LengthExceeded";
    case ViolationKind::AlternationBroken: return "AlternationBroken";
    case ViolationKind::NotPatientFirst: return "NotPatientFirst";
    case ViolationKind::IndexMismatch: return "IndexMismatch";
    case ViolationKind::EmptyUtterance: return "EmptyUtterance";
    case ViolationKind::PatientHasStrategies: return "PatientHasStrategies";
    case ViolationKind::MaxTurnsMismatch: return "MaxTurnsMismatch";
    case ViolationKind::StrategyCountMismatch: return "StrategyCountMismatch";
    case ViolationKind::EventOutOfRange: return "EventOutOfRange";
  }
  return "Unknown";
}

std::vector<Violation> validate_session(const SessionRecord& record, std::size_t max_utterances) {
  std::vector<Violation> out;
  const auto& u = record.utterances;

  if (u.size() > max_utterances) {
    out.push_back({ViolationKind::LengthExceeded,
                   std::to_string(u.size()) + " utterances, cap " + std::to_string(max_utterances)});
  }
  if (!u.empty() && u.front().role != Role::Patient) {
    out.push_back({ViolationKind::NotPatientFirst, "first utterance is the therapist's"});
  }
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (u[i].role == u[i - 1].role) {
      out.push_back({ViolationKind::AlternationBroken,
                     "utterances " + std::to_string(i - 1) + " and " + std::to_string(i) + " share a role"});
      break;
    }
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i].index != i) {
      out.push_back({ViolationKind::IndexMismatch, "utterance at position " + std::to_string(i) + " has index " +
                                                       std::to_string(u[i].index)});
      break;
    }
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i].text.empty()) {
      out.push_back({ViolationKind::EmptyUtterance, "utterance " + std::to_string(i) + " is empty"});
      break;
    }
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i].role == Role::Patient && !u[i].strategies.empty()) {
      out.push_back({ViolationKind::PatientHasStrategies, "patient utterance " + std::to_string(i)});
      break;
    }
  }
  bool max_turns = record.termination.kind == Termination::Kind::MaxTurns;
  bool at_cap = u.size() == max_utterances;
  // MaxTurns only at the cap. A session at the cap may still be Resolved (the
  // final exchange answered a farewell) or Error.
  if (max_turns && !at_cap) {
    out.push_back({ViolationKind::MaxTurnsMismatch,
                   std::string(to_string(record.termination.kind)) + " with " + std::to_string(u.size()) +
                       " utterances"});
  }
  if (count_strategies(u) != record.strategy_counts) {
    out.push_back({ViolationKind::StrategyCountMismatch, "strategy_counts differ from therapist utterances"});
  }
  for (const auto& e : record.events) {
    if (e.injected_at_turn >= max_utterances) {
      out.push_back({ViolationKind::EventOutOfRange, "event at turn " + std::to_string(e.injected_at_turn)});
      break;
    }
  }
  return out;
}

}  // namespace therasim
