#pragma once

// The patient/therapist/environment agent loop. A SessionDriver owns one
// session's history, memory and event RNG; batch runs and the HTTP API both
// advance sessions through it so they share the same alternation and
// termination rules.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "therasim/backends/backend.hpp"
#include "therasim/backends/templates.hpp"
#include "therasim/core/types.hpp"

namespace therasim {

enum class MemoryKind { Interaction, EmotionalState, CopingMechanism, EnvironmentalInfluence };
std::string_view to_string(MemoryKind k);
MemoryKind memory_kind_from_string(std::string_view s);

struct MemoryEntry {
  MemoryKind kind = MemoryKind::Interaction;
  std::string text;
  std::size_t turn_index = 0;

  bool operator==(const MemoryEntry&) const = default;
};

// Append-only log whose turn indices never decrease.
class PatientMemory {
 public:
  // Throws Error(Precondition) if the entry's turn_index is below the last one.
  void append(MemoryEntry entry);
  const std::vector<MemoryEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  // "Recent memory:" followed by the last `window` entries, oldest first.
  // Empty string when there is nothing to show.
  std::string render_recent(std::size_t window) const;

 private:
  std::vector<MemoryEntry> entries_;
};

const std::vector<std::string>& default_farewell_lexicon();

struct SessionConfig {
  std::size_t max_utterances = kMaxUtterances;
  std::size_t event_period_k = 10;
  double event_probability = 0.3;
  std::uint64_t seed = 0;
  double resolution_threshold = 4.0;
  double generation_temperature = kGenerationTemperature;
  bool environment_enabled = true;
  bool judge_enabled = true;
  std::size_t memory_window = 10;
  std::vector<std::string> farewell_lexicon = default_farewell_lexicon();

  // max_utterances >= 2 and even, k >= 1, probability in [0, 1],
  // threshold in [1, 5], temperature in [0, 2].
  void validate() const;
};

void to_json(Json& j, const SessionConfig& c);
// Reads the fields of a "simulate" config object; absent keys keep defaults.
void from_json(const Json& j, SessionConfig& c);

// Per-session seed derived from the run seed and the profile id, so that
// sessions are independent of batch order and parallelism.
std::uint64_t derive_session_seed(std::uint64_t run_seed, std::string_view profile_id);
std::string session_content_id(std::string_view profile_id, std::string_view model, std::uint64_t seed);

// ---- environment agent ----

// Uniform draw in [0, 1) from the top 53 bits of the generator.
double uniform01(std::mt19937_64& rng);

// Draws a category from the fixed weight table and a description for it.
EnvironmentEvent draw_event(std::mt19937_64& rng, std::size_t utterance_index);

// At every k-th patient turn (1-based) draws once from the rng and, with
// probability event_probability, injects an event into memory. Nothing is
// drawn on other turns or when the environment is disabled.
std::optional<EnvironmentEvent> maybe_inject_event(PatientMemory& memory, std::size_t patient_turn,
                                                   std::size_t utterance_index, const SessionConfig& config,
                                                   std::mt19937_64& rng);

// ---- prompt pieces ----

// {analysis}: profile lines, then the recent-memory block when non-empty.
std::string render_analysis(const PatientProfile& profile, const PatientMemory& memory, std::size_t window);
std::string render_usage_counts(const StrategyCounts& usage,
                                const TemplateRegistry& templates = TemplateRegistry::builtin());
std::string render_framework_catalog();
std::string render_actionable_catalog();

// ---- agent turns ----

// Pre: history is empty or ends with a therapist utterance.
Utterance patient_turn(const PatientProfile& profile, const PatientMemory& memory,
                       const std::vector<Utterance>& history, const ModelEndpoint& patient,
                       const TemplateRegistry& templates = TemplateRegistry::builtin(),
                       std::size_t memory_window = 10);

// Doctor prompt with {strategy} bound to the catalogs and usage counts.
std::string render_therapist_prompt(const std::vector<Utterance>& history, const StrategyCounts& usage,
                                    const TemplateRegistry& templates = TemplateRegistry::builtin());

struct AttributionResult {
  std::vector<StrategyRef> strategies;
  std::vector<std::string> unknown;
};
ParseOutcome<AttributionResult> parse_attribution(std::string_view reply);

struct TherapistTurn {
  Utterance utterance;
  std::vector<std::string> warnings;
  bool from_footer = false;
};

// Pre: history ends with a patient utterance. Strategies come from a
// "**Strategies:**" footer when the reply has one (the footer is stripped),
// else from an attribution call. `usage` is incremented for each strategy.
TherapistTurn therapist_turn(const std::vector<Utterance>& history, StrategyCounts& usage,
                             const ModelEndpoint& therapist, const ModelEndpoint& attribution,
                             const TemplateRegistry& templates = TemplateRegistry::builtin());

// ---- termination ----

enum class TerminationDecision { Continue, Resolved, MaxTurns };
std::string_view to_string(TerminationDecision d);

// Case-insensitive whole-phrase match against the lexicon.
bool matches_farewell(std::string_view text, const std::vector<std::string>& lexicon);

// Resolved when the history ends with a therapist reply to a patient
// farewell and, with the judge enabled, both state scores reach the
// threshold; otherwise MaxTurns at the cap. A resolution on the final
// exchange wins over the cap. A failing judge call degrades to the lexicon
// check with a warning.
TerminationDecision detect_termination(const std::vector<Utterance>& history, const SessionConfig& config,
                                       const ModelEndpoint& judge,
                                       const TemplateRegistry& templates = TemplateRegistry::builtin(),
                                       std::vector<std::string>* warnings = nullptr,
                                       std::optional<MotivationConfidence>* scored = nullptr);

// ---- session loop ----

struct SessionBackends {
  ModelEndpoint patient;
  ModelEndpoint therapist;
  ModelEndpoint judge;
  ModelEndpoint attribution;
};

class SessionDriver {
 public:
  SessionDriver(PatientProfile profile, SessionConfig config, SessionBackends backends,
                const TemplateRegistry& templates = TemplateRegistry::builtin(), std::string session_id = {});

  // Rebuilds a stored session: the event rng is replayed from the record's
  // seed and memory is rebuilt from its events and therapist turns. With
  // `open` false the stored termination is kept and the session is closed.
  static SessionDriver resume(PatientProfile profile, SessionConfig config, SessionBackends backends,
                              SessionRecord record, bool open,
                              const TemplateRegistry& templates = TemplateRegistry::builtin());

  const SessionRecord& record() const noexcept { return record_; }
  const PatientMemory& memory() const noexcept { return memory_; }
  bool finished() const noexcept { return finished_; }
  Role next_role() const noexcept;

  // Engine-produced turns.
  const Utterance& patient_step();
  const Utterance& therapist_step();
  // Human-supplied turn for the role that is due next.
  const Utterance& human_step(Role role, std::string text);

  // Marks the session closed by an unrecoverable failure.
  void fail(std::string reason);
  // Closes an open session on request: Resolved when the last patient turn
  // is a farewell, otherwise Error with "closed: <reason>".
  void close(std::string reason);

  // Runs engine turns to completion. Backend errors end the session with an
  // Error termination; the returned record has passed validate_session.
  SessionRecord run();

 private:
  void ensure_open(Role role) const;
  void before_patient_turn();
  const Utterance& append(Utterance u, std::vector<std::string> warnings);
  void after_append();

  PatientProfile profile_;
  SessionConfig config_;
  SessionBackends backends_;
  const TemplateRegistry* templates_;
  SessionRecord record_;
  PatientMemory memory_;
  std::mt19937_64 rng_;
  std::size_t prepared_for_ = static_cast<std::size_t>(-1);
  bool finished_ = false;
};

SessionRecord run_session(const PatientProfile& profile, const SessionConfig& config,
                          const SessionBackends& backends,
                          const TemplateRegistry& templates = TemplateRegistry::builtin());

}  // namespace therasim
