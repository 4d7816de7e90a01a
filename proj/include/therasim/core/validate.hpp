#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "therasim/core/types.hpp"

namespace therasim {

enum class ViolationKind {
  LengthExceeded,
  AlternationBroken,
  NotPatientFirst,
  IndexMismatch,
  EmptyUtterance,
  PatientHasStrategies,
  MaxTurnsMismatch,
  StrategyCountMismatch,
  EventOutOfRange,
};

std::string_view to_string(ViolationKind v);

struct Violation {
  ViolationKind kind;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

// Checks every SessionRecord invariant. An empty result means the record is
// well formed; violations are data, never exceptions.
std::vector<Violation> validate_session(const SessionRecord& record, std::size_t max_utterances = kMaxUtterances);

}  // namespace therasim
