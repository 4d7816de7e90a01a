#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "therasim/evaluation/analytics.hpp"

namespace therasim {
namespace {

struct Sum {
  double total = 0.0;
  std::size_t count = 0;

  void add(double v) {
    total += v;
    ++count;
  }
  Mean mean() const { return Mean{count ? total / static_cast<double>(count) : 0.0, count}; }
};

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&v](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    auto j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (auto k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double mean_of(std::span<const double> v) {
  if (v.empty()) throw Error(Errc::Precondition, "mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ScoredSession scored_session(const SessionRecord& record, std::optional<MotivationConfidence> final_state,
                             std::optional<ScoreCard> dimensions) {
  ScoredSession s;
  s.session_id = record.id;
  s.model = record.model;
  s.difficulty = record.difficulty;
  s.end_turn = record.utterances.size();
  s.unique_strategies = unique_strategy_count(record.strategy_counts);
  s.final_state = final_state;
  s.dimensions = dimensions;
  return s;
}

void to_json(Json& j, const ScoredSession& s) {
  j = Json{{"schema_version", kSchemaVersion},
           {"session_id", s.session_id},
           {"model", s.model},
           {"difficulty", to_string(s.difficulty)},
           {"end_turn", s.end_turn},
           {"unique_strategies", s.unique_strategies},
           {"final_state", s.final_state ? Json(*s.final_state) : Json(nullptr)},
           {"dimensions", s.dimensions ? Json(*s.dimensions) : Json(nullptr)}};
}

void from_json(const Json& j, ScoredSession& s) {
  check_schema_version(j);
  s.session_id = j.at("session_id").get<std::string>();
  s.model = j.at("model").get<std::string>();
  s.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
  s.end_turn = j.at("end_turn").get<std::size_t>();
  s.unique_strategies = j.value("unique_strategies", std::size_t{0});
  s.final_state.reset();
  s.dimensions.reset();
  if (auto it = j.find("final_state"); it != j.end() && !it->is_null()) s.final_state = it->get<MotivationConfidence>();
  if (auto it = j.find("dimensions"); it != j.end() && !it->is_null()) s.dimensions = it->get<ScoreCard>();
}

const ModelAggregate* AggregateReport::find(std::string_view model) const {
  for (const auto& m : models) {
    if (m.model == model) return &m;
  }
  return nullptr;
}

AggregateReport aggregate_run(std::span<const ScoredSession> sessions) {
  struct Acc {
    std::map<Difficulty, std::pair<Sum, Sum>> cells;
    std::array<Sum, 5> dims;
    Sum turns;
  };
  std::map<std::string, Acc> by_model;
  AggregateReport report;
  for (const auto& s : sessions) {
    if (!s.final_state) {
      ++report.excluded;
      continue;
    }
    auto& acc = by_model[s.model];
    auto& cell = acc.cells[s.difficulty];
    cell.first.add(s.final_state->motivation());
    cell.second.add(s.final_state->confidence());
    acc.turns.add(static_cast<double>(s.end_turn));
    if (s.dimensions) {
      for (std::size_t d = 0; d < 5; ++d) acc.dims[d].add(s.dimensions->values()[d]);
    }
  }
  for (const auto& [model, acc] : by_model) {
    ModelAggregate m;
    m.model = model;
    Sum motivation_cells, confidence_cells;
    for (const auto& [difficulty, sums] : acc.cells) {
      CellStats c{sums.first.mean(), sums.second.mean()};
      m.cells[difficulty] = c;
      motivation_cells.add(c.motivation.value);
      confidence_cells.add(c.confidence.value);
    }
    // Macro average: the count reports how many cells it spans.
    m.overall = CellStats{motivation_cells.mean(), confidence_cells.mean()};
    if (acc.dims[0].count > 0) {
      std::array<Mean, 5> dims;
      for (std::size_t d = 0; d < 5; ++d) dims[d] = acc.dims[d].mean();
      m.dimensions = dims;
    }
    m.end_turn = acc.turns.mean();
    report.models.push_back(std::move(m));
  }
  return report;
}

double relative_change(double subject, double baseline) {
  if (baseline == 0.0) throw Error(Errc::InvalidArgument, "relative change against a zero baseline");
  return (subject - baseline) / baseline;
}

Gain model_gain(const AggregateReport& report, std::string_view subject, std::string_view baseline) {
  const auto* s = report.find(subject);
  const auto* b = report.find(baseline);
  if (!s || !b) throw Error(Errc::NotFound, "model missing from the aggregate report");
  Gain g;
  g.subject = std::string(subject);
  g.baseline = std::string(baseline);
  g.motivation_absolute = s->overall.motivation.value - b->overall.motivation.value;
  g.confidence_absolute = s->overall.confidence.value - b->overall.confidence.value;
  g.motivation_relative = relative_change(s->overall.motivation.value, b->overall.motivation.value);
  g.confidence_relative = relative_change(s->overall.confidence.value, b->overall.confidence.value);
  return g;
}

TurnSavings turn_savings(std::span<const double> subject_end_turns, std::span<const double> baseline_end_turns) {
  TurnSavings t;
  t.subject_mean = mean_of(subject_end_turns);
  t.baseline_mean = mean_of(baseline_end_turns);
  t.fraction_fewer = -relative_change(t.subject_mean, t.baseline_mean);
  return t;
}

TurnSavings turn_savings(std::span<const ScoredSession> sessions, std::string_view subject, std::string_view baseline,
                         std::optional<Difficulty> difficulty) {
  std::vector<double> a, b;
  for (const auto& s : sessions) {
    if (difficulty && s.difficulty != *difficulty) continue;
    if (s.model == subject) a.push_back(static_cast<double>(s.end_turn));
    if (s.model == baseline) b.push_back(static_cast<double>(s.end_turn));
  }
  return turn_savings(a, b);
}

std::vector<TrajectoryPoint> trajectory_bins(std::span<const ScoredSession> sessions) {
  std::map<std::size_t, std::pair<Sum, Sum>> bins;
  for (const auto& s : sessions) {
    if (!s.final_state) continue;
    auto& bin = bins[s.end_turn];
    bin.first.add(s.final_state->motivation());
    bin.second.add(s.final_state->confidence());
  }
  std::vector<TrajectoryPoint> out;
  for (const auto& [turn, sums] : bins) {
    out.push_back({turn, sums.first.mean().value, sums.second.mean().value, sums.first.count});
  }
  return out;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::InvalidArgument, "samples differ in length");
  Correlation c;
  c.sample_size = x.size();
  if (x.size() < 3) {
    c.reason = "fewer than 3 samples";
    return c;
  }
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  double mx = mean_of(rx), my = mean_of(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) {
    c.reason = "constant sample";
    return c;
  }
  c.coefficient = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return c;
}

std::vector<CorrelationCell> strategy_diversity_correlation(std::span<const ScoredSession> sessions) {
  std::map<std::pair<std::string, Difficulty>, std::array<std::vector<double>, 3>> groups;
  for (const auto& s : sessions) {
    if (!s.final_state) continue;
    auto& g = groups[{s.model, s.difficulty}];
    g[0].push_back(static_cast<double>(s.unique_strategies));
    g[1].push_back(s.final_state->motivation());
    g[2].push_back(s.final_state->confidence());
  }
  std::vector<CorrelationCell> out;
  for (const auto& [key, g] : groups) {
    out.push_back({key.first, key.second, spearman(g[0], g[1]), spearman(g[0], g[2])});
  }
  return out;
}

DeficiencyReport deficiency_rates(std::span<const DeficiencyFlags> flags, std::size_t excluded) {
  DeficiencyReport r;
  r.evaluated = flags.size();
  r.excluded = excluded;
  if (flags.empty()) return r;
  auto clean = [&flags](bool DeficiencyFlags::*field) {
    auto n = std::count_if(flags.begin(), flags.end(), [field](const DeficiencyFlags& f) { return !(f.*field); });
    return static_cast<double>(n) / static_cast<double>(flags.size());
  };
  r.empathy_clean = clean(&DeficiencyFlags::lack_of_empathy);
  r.strategy_clean = clean(&DeficiencyFlags::inappropriate_strategy_use);
  r.clarity_clean = clean(&DeficiencyFlags::unclear_expression);
  return r;
}

DeficiencyReport deficiency_rates(std::span<const SessionRecord> sessions, const ModelEndpoint& judge,
                                  const TemplateRegistry& templates) {
  if (sessions.empty()) throw Error(Errc::Precondition, "no sessions to evaluate");
  std::vector<DeficiencyFlags> flags;
  std::size_t excluded = 0;
  for (const auto& s : sessions) {
    try {
      flags.push_back(flag_deficiencies(s, judge, templates));
    } catch (const Error&) {
      ++excluded;
    }
  }
  return deficiency_rates(flags, excluded);
}

WinRate win_rate(std::span<const WinRecord> records, const std::map<std::string, std::string>& model_of,
                 std::string_view subject) {
  if (records.empty()) throw Error(Errc::Precondition, "no comparison records");
  auto model = [&model_of](const std::string& id) -> std::string_view {
    auto it = model_of.find(id);
    return it == model_of.end() ? std::string_view() : std::string_view(it->second);
  };
  WinRate w;
  w.subject = std::string(subject);
  for (const auto& r : records) {
    bool a = model(r.conversation_a_id) == subject;
    bool b = model(r.conversation_b_id) == subject;
    if (a == b) continue;
    if (r.winner == Winner::Tie) {
      ++w.ties;
    } else if ((r.winner == Winner::First) == a) {
      ++w.wins;
    } else {
      ++w.losses;
    }
  }
  if (w.wins + w.losses > 0) w.fraction = static_cast<double>(w.wins) / static_cast<double>(w.wins + w.losses);
  return w;
}

void to_json(Json& j, const WinRate& w) {
  j = Json{{"subject", w.subject},
           {"wins", w.wins},
           {"losses", w.losses},
           {"ties", w.ties},
           {"fraction", w.fraction ? Json(*w.fraction) : Json(nullptr)}};
}

}  // namespace therasim
