#pragma once

// Pure folds over scored sessions: per-cell means, relative gains, turn
// statistics, trajectory bins, strategy-diversity correlation, deficiency
// rates and win rates.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "therasim/core/types.hpp"
#include "therasim/evaluation/judge.hpp"

namespace therasim {

struct ScoredSession {
  std::string session_id;
  std::string model;
  Difficulty difficulty = Difficulty::Easy;
  std::size_t end_turn = 0;           // utterance count at termination
  std::size_t unique_strategies = 0;  // distinct strategies used over the session
  std::optional<MotivationConfidence> final_state;
  std::optional<ScoreCard> dimensions;
};

ScoredSession scored_session(const SessionRecord& record, std::optional<MotivationConfidence> final_state = {},
                             std::optional<ScoreCard> dimensions = {});

void to_json(Json& j, const ScoredSession& s);
void from_json(const Json& j, ScoredSession& s);

struct Mean {
  double value = 0.0;
  std::size_t count = 0;

  bool operator==(const Mean&) const = default;
};

struct CellStats {
  Mean motivation;
  Mean confidence;

  bool operator==(const CellStats&) const = default;
};

struct ModelAggregate {
  std::string model;
  std::map<Difficulty, CellStats> cells;
  // Macro average over the difficulty cells present (each cell weighs the same).
  CellStats overall;
  std::optional<std::array<Mean, 5>> dimensions;
  Mean end_turn;

  bool operator==(const ModelAggregate&) const = default;
};

struct AggregateReport {
  std::vector<ModelAggregate> models;  // sorted by model name
  std::size_t excluded = 0;            // sessions without a final state score

  const ModelAggregate* find(std::string_view model) const;
  bool operator==(const AggregateReport&) const = default;
};

AggregateReport aggregate_run(std::span<const ScoredSession> sessions);

// (subject - baseline) / baseline; throws Error(InvalidArgument) on a zero baseline.
double relative_change(double subject, double baseline);

struct Gain {
  std::string subject;
  std::string baseline;
  double motivation_relative = 0.0;
  double motivation_absolute = 0.0;
  double confidence_relative = 0.0;
  double confidence_absolute = 0.0;
};

// Gain of the subject's overall means over the baseline's.
Gain model_gain(const AggregateReport& report, std::string_view subject, std::string_view baseline);

struct TurnSavings {
  double subject_mean = 0.0;
  double baseline_mean = 0.0;
  double fraction_fewer = 0.0;  // (baseline - subject) / baseline
};

TurnSavings turn_savings(std::span<const double> subject_end_turns, std::span<const double> baseline_end_turns);
// Same statistic over sessions filtered by model and, optionally, difficulty.
TurnSavings turn_savings(std::span<const ScoredSession> sessions, std::string_view subject, std::string_view baseline,
                         std::optional<Difficulty> difficulty = {});

struct TrajectoryPoint {
  std::size_t end_turn = 0;
  double mean_motivation = 0.0;
  double mean_confidence = 0.0;
  std::size_t session_count = 0;

  bool operator==(const TrajectoryPoint&) const = default;
};

// Sessions with a final state, grouped by end turn, ascending.
std::vector<TrajectoryPoint> trajectory_bins(std::span<const ScoredSession> sessions);

struct Correlation {
  std::optional<double> coefficient;
  std::size_t sample_size = 0;
  std::string reason;  // why the coefficient is null
};

// Spearman's rho: Pearson correlation of average ranks (ties share ranks).
Correlation spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationCell {
  std::string model;
  Difficulty difficulty = Difficulty::Easy;
  Correlation motivation;
  Correlation confidence;
};

std::vector<CorrelationCell> strategy_diversity_correlation(std::span<const ScoredSession> sessions);

struct DeficiencyReport {
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  double empathy_clean = 1.0;   // fraction without lack of empathy
  double strategy_clean = 1.0;  // fraction without inappropriate strategy use
  double clarity_clean = 1.0;   // fraction without unclear expression
};

DeficiencyReport deficiency_rates(std::span<const DeficiencyFlags> flags, std::size_t excluded = 0);
// Judges each session; sessions whose judge call fails are excluded.
DeficiencyReport deficiency_rates(std::span<const SessionRecord> sessions, const ModelEndpoint& judge,
                                  const TemplateRegistry& templates = TemplateRegistry::builtin());

struct WinRate {
  std::string subject;
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  std::optional<double> fraction;  // wins / (wins + losses); null when no decisive record

  bool operator==(const WinRate&) const = default;
};

// `model_of` maps conversation ids to model names. Only records with the
// subject on exactly one side count. Throws Error(Precondition) when empty.
WinRate win_rate(std::span<const WinRecord> records, const std::map<std::string, std::string>& model_of,
                 std::string_view subject);

void to_json(Json& j, const WinRate& w);

}  // namespace therasim
