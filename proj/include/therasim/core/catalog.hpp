#pragma once

// The two closed strategy catalogs: 13 named therapeutic frameworks and the
// 18 numbered actionable strategies. Both are tracked and counted separately.

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace therasim {

enum class Framework : int {
  MI = 0,
  CBT,
  SFBT,
  PeerSupport,
  MBI,
  BA,
  RelapsePrevention,
  StrengthBased,
  Psychoeducation,
  HarmReduction,
  FamilySocialSupport,
  SelfCompassion,
  CopingSkills,
};

inline constexpr std::size_t kFrameworkCount = 13;
inline constexpr int kActionableCount = 18;

struct FrameworkInfo {
  Framework id;
  std::string_view key;        // canonical short name, e.g. "MI"
  std::string_view full_name;  // e.g. "Motivational Interviewing"
  std::string_view acronym;    // empty when the framework has none
  std::string_view description;
};

struct ActionableInfo {
  int id;  // 1..18
  std::string_view description;
};

std::span<const FrameworkInfo> frameworks();
std::span<const ActionableInfo> actionable_strategies();

// Reference into one of the two catalogs. Ordering puts all frameworks
// (catalog order) before actionable strategies (by id).
class StrategyRef {
 public:
  enum class Kind { Framework, Actionable };

  static StrategyRef framework(Framework f) { return StrategyRef(Kind::Framework, static_cast<int>(f)); }
  static StrategyRef actionable(int id);

  Kind kind() const noexcept { return kind_; }
  bool is_framework() const noexcept { return kind_ == Kind::Framework; }
  Framework as_framework() const;
  int actionable_id() const;

  // Stable identifier used in persisted count maps ("MI", "Actionable-7").
  std::string key() const;
  // Human-facing name ("Motivational Interviewing (MI)", "Actionable Strategy 7").
  std::string display_name() const;
  std::string_view description() const;

  auto operator<=>(const StrategyRef&) const = default;

 private:
  StrategyRef(Kind kind, int value) : kind_(kind), value_(value) {}

  Kind kind_;
  int value_;
};

// Every entry of both catalogs, frameworks first.
std::vector<StrategyRef> all_strategies();

// Maps a free-text label onto a catalog entry. Case and whitespace are
// normalized and a trailing parenthetical acronym is trimmed; there is no
// fuzzy matching. Throws Error(UnknownStrategy) when nothing matches.
StrategyRef canonicalize_strategy(std::string_view label);

// Non-throwing variant.
std::optional<StrategyRef> try_canonicalize_strategy(std::string_view label);

// Lookup by StrategyRef::key(); nullopt for unknown keys.
std::optional<StrategyRef> strategy_from_key(std::string_view key);

}  // namespace therasim
