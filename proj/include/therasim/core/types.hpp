#pragma once

// Domain value types shared by every module, with their canonical JSON forms.
// Persisted top-level records carry a "schema_version" field.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "therasim/core/catalog.hpp"

namespace therasim {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kMaxUtterances = 60;

// Throws Error(SchemaMismatch) when the record is from a newer schema.
void check_schema_version(const Json& j);

enum class Difficulty { Easy, Medium, Hard };
inline constexpr std::array<Difficulty, 3> kAllDifficulties{Difficulty::Easy, Difficulty::Medium,
                                                            Difficulty::Hard};
std::string_view to_string(Difficulty d);
Difficulty difficulty_from_string(std::string_view s);

struct PatientProfile {
  std::string id;
  std::optional<std::string> personality_traits;
  std::optional<std::string> substance_use_history;
  std::optional<std::string> significant_life_events;
  std::optional<std::string> behavioral_themes;
  std::optional<std::string> motivations;
  Difficulty difficulty = Difficulty::Easy;

  bool operator==(const PatientProfile&) const = default;
};

// Profile rendered as the labelled block used inside prompts.
std::string render_profile(const PatientProfile& profile);
// True when at least one narrative field is present.
bool has_narrative(const PatientProfile& profile);

enum class Role { Patient, Therapist };
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct Utterance {
  Role role = Role::Patient;
  std::string text;
  std::size_t index = 0;
  std::vector<StrategyRef> strategies;

  bool operator==(const Utterance&) const = default;
};

// "Patient: ..." / "Therapist: ..." lines, in order, no system text.
std::string render_transcript(const std::vector<Utterance>& utterances);

using StrategyCounts = std::map<StrategyRef, int>;

// Multiset union of strategies over therapist utterances.
StrategyCounts count_strategies(const std::vector<Utterance>& utterances);
std::size_t unique_strategy_count(const StrategyCounts& counts);

enum class EventCategory { JobLoss, RelationshipBreakdown, PeerPressure, Stressor, Other };
std::string_view to_string(EventCategory c);
EventCategory event_category_from_string(std::string_view s);

struct EnvironmentEvent {
  EventCategory category = EventCategory::Stressor;
  std::string other_label;  // only for EventCategory::Other
  std::string description;
  std::size_t injected_at_turn = 0;

  bool operator==(const EnvironmentEvent&) const = default;
};

struct Termination {
  enum class Kind { Resolved, MaxTurns, Error };
  Kind kind = Kind::MaxTurns;
  std::string reason;  // set for Error

  bool operator==(const Termination&) const = default;
};
std::string_view to_string(Termination::Kind k);

struct SessionRecord {
  std::string id;
  std::string profile_id;
  std::string model;  // therapist model label
  Difficulty difficulty = Difficulty::Easy;
  std::vector<Utterance> utterances;
  std::vector<EnvironmentEvent> events;
  StrategyCounts strategy_counts;
  Termination termination;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  bool operator==(const SessionRecord&) const = default;
};

// Five clinical dimension scores, each in [1, 5].
class ScoreCard {
 public:
  ScoreCard(double responsiveness, double empathy, double persuasion_appropriateness,
            double clinical_relevance, double behavioral_realism);

  double responsiveness() const noexcept { return values_[0]; }
  double empathy() const noexcept { return values_[1]; }
  double persuasion_appropriateness() const noexcept { return values_[2]; }
  double clinical_relevance() const noexcept { return values_[3]; }
  double behavioral_realism() const noexcept { return values_[4]; }
  const std::array<double, 5>& values() const noexcept { return values_; }

  // Judge-facing labels, in R, E, P, C, B order.
  static const std::array<std::string_view, 5>& dimension_names();

  bool operator==(const ScoreCard&) const = default;

 private:
  std::array<double, 5> values_;
};

class MotivationConfidence {
 public:
  MotivationConfidence(double motivation, double confidence, std::size_t at_utterance);

  double motivation() const noexcept { return motivation_; }
  double confidence() const noexcept { return confidence_; }
  std::size_t at_utterance() const noexcept { return at_utterance_; }

  bool operator==(const MotivationConfidence&) const = default;

 private:
  double motivation_;
  double confidence_;
  std::size_t at_utterance_;
};

bool in_score_range(double v);

struct Provenance {
  enum class Kind { JudgeRanking, HumanAnnotation, Rewrite };
  Kind kind = Kind::JudgeRanking;
  std::string record_id;

  bool operator==(const Provenance&) const = default;
};
std::string_view to_string(Provenance::Kind k);

struct PreferencePair {
  std::vector<Utterance> context;
  std::string chosen;
  std::string rejected;
  Provenance provenance;
  std::optional<std::string> rationale;

  bool operator==(const PreferencePair&) const = default;
};

// Checked constructor: chosen must differ from rejected.
PreferencePair make_preference_pair(std::vector<Utterance> context, std::string chosen, std::string rejected,
                                    Provenance provenance, std::optional<std::string> rationale = {});

void to_json(Json& j, const PatientProfile& p);
void from_json(const Json& j, PatientProfile& p);
void to_json(Json& j, const Utterance& u);
void from_json(const Json& j, Utterance& u);
void to_json(Json& j, const EnvironmentEvent& e);
void from_json(const Json& j, EnvironmentEvent& e);
void to_json(Json& j, const Termination& t);
void from_json(const Json& j, Termination& t);
void to_json(Json& j, const SessionRecord& s);
void from_json(const Json& j, SessionRecord& s);
void to_json(Json& j, const ScoreCard& s);
ScoreCard score_card_from_json(const Json& j);
void to_json(Json& j, const MotivationConfidence& m);
MotivationConfidence motivation_confidence_from_json(const Json& j);
void to_json(Json& j, const Provenance& p);
void from_json(const Json& j, Provenance& p);
void to_json(Json& j, const PreferencePair& p);
void from_json(const Json& j, PreferencePair& p);

Json counts_to_json(const StrategyCounts& counts);
StrategyCounts counts_from_json(const Json& j);

}  // namespace therasim

template <>
struct nlohmann::adl_serializer<therasim::StrategyRef> {
  static therasim::StrategyRef from_json(const nlohmann::json& j);
  static void to_json(nlohmann::json& j, const therasim::StrategyRef& s);
};

template <>
struct nlohmann::adl_serializer<therasim::ScoreCard> {
  static therasim::ScoreCard from_json(const nlohmann::json& j) { return therasim::score_card_from_json(j); }
  static void to_json(nlohmann::json& j, const therasim::ScoreCard& s) { therasim::to_json(j, s); }
};

template <>
struct nlohmann::adl_serializer<therasim::MotivationConfidence> {
  static therasim::MotivationConfidence from_json(const nlohmann::json& j) {
    return therasim::motivation_confidence_from_json(j);
  }
  static void to_json(nlohmann::json& j, const therasim::MotivationConfidence& m) { therasim::to_json(j, m); }
};
