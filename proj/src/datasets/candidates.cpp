#include <algorithm>
#include <cctype>

#include "therasim/core/hash.hpp"
#include "therasim/core/json_text.hpp"
#include "therasim/datasets/datasets.hpp"
#include "therasim/evaluation/judge.hpp"
#include "therasim/simulation/session.hpp"

namespace therasim {
namespace {

std::optional<std::size_t> label_index(const Json& item, std::size_t count) {
  std::string label;
  if (item.is_number_integer()) {
    label = std::to_string(item.get<long long>());
  } else if (item.is_string()) {
    label = std::string(trim(item.get_ref<const std::string&>()));
  } else {
    return std::nullopt;
  }
  std::string lowered = label;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) { return std::tolower(c); });
  std::string_view digits = lowered;
  if (digits.starts_with("response")) {
    digits.remove_prefix(8);
    if (!digits.empty() && (digits.front() == '_' || digits.front() == ' ')) digits.remove_prefix(1);
  }
  if (digits.empty() || digits.size() > 6 ||
      !std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::nullopt;
  }
  auto n = std::stoul(std::string(digits));
  if (n < 1 || n > count) return std::nullopt;
  return n - 1;
}

}  // namespace

void to_json(Json& j, const CandidateSet& c) {
  j = Json{{"schema_version", kSchemaVersion},
           {"id", c.id},
           {"context", c.context},
           {"candidates", c.candidates},
           {"warnings", c.warnings}};
}

void from_json(const Json& j, CandidateSet& c) {
  check_schema_version(j);
  c.id = j.at("id").get<std::string>();
  c.context = j.at("context").get<std::vector<Utterance>>();
  c.candidates = j.at("candidates").get<std::vector<std::string>>();
  c.warnings = j.value("warnings", std::vector<std::string>{});
  if (c.candidates.size() < 2) throw Error(Errc::InvalidArgument, "candidate set needs at least two candidates");
}

CandidateSet generate_candidates(const std::vector<Utterance>& context, std::size_t k, const ModelEndpoint& therapist,
                                 const TemplateRegistry& templates) {
  if (k < 2) throw Error(Errc::Precondition, "need at least two candidates");
  if (context.empty() || context.back().role != Role::Patient) {
    throw Error(Errc::Precondition, "candidate context must end with a patient utterance");
  }
  if (!therapist) throw Error(Errc::Precondition, "candidate generation needs a backend");

  auto prompt = render_therapist_prompt(context, count_strategies(context), templates);
  CandidateSet set;
  set.context = context;
  for (std::size_t slot = 0; slot < k; ++slot) {
    bool placed = false;
    for (int attempt = 0; attempt <= kDuplicateRetries; ++attempt) {
      auto text = strip_strategy_footer(therapist.ask(prompt));
      if (text.empty()) continue;
      if (std::find(set.candidates.begin(), set.candidates.end(), text) == set.candidates.end()) {
        set.candidates.push_back(std::move(text));
        placed = true;
        break;
      }
    }
    if (!placed) {
      set.warnings.push_back("candidate " + std::to_string(slot + 1) + " stayed a duplicate after " +
                             std::to_string(kDuplicateRetries) + " regenerations and was dropped");
    }
  }
  if (set.candidates.size() < 2) {
    throw Error(Errc::TooFewDistinct, "only " + std::to_string(set.candidates.size()) + " distinct candidate(s)");
  }
  set.id = content_id("c-", Json{{"context", set.context}, {"candidates", set.candidates}}.dump());
  return set;
}

std::size_t RankingRecord::candidate_count() const {
  std::size_t n = 0;
  for (const auto& t : tiers) n += t.size();
  return n;
}

void to_json(Json& j, const RankingRecord& r) {
  Json ranked = Json::array();
  for (const auto& tier : r.tiers) {
    auto label = [](std::size_t i) { return "response_" + std::to_string(i + 1); };
    if (tier.size() == 1) {
      ranked.push_back(label(tier.front()));
    } else {
      Json shared = Json::array();
      for (auto i : tier) shared.push_back(label(i));
      ranked.push_back(shared);
    }
  }
  j = Json{{"Ranked Responses", ranked}, {"Rationale", r.rationale}};
}

ParseOutcome<RankingRecord> parse_ranking(std::string_view reply, std::size_t candidate_count) {
  using Outcome = ParseOutcome<RankingRecord>;
  auto j = extract_json_object(reply);
  if (!j) return Outcome::fail("no JSON object in reply");
  auto it = j->find("Ranked Responses");
  if (it == j->end() || !it->is_array()) return Outcome::fail("missing \"Ranked Responses\" array");
  RankingRecord r;
  std::vector<bool> seen(candidate_count, false);
  for (const auto& entry : *it) {
    std::vector<std::size_t> tier;
    auto take = [&](const Json& item) {
      auto idx = label_index(item, candidate_count);
      if (!idx) return false;
      tier.push_back(*idx);
      return true;
    };
    bool ok = true;
    if (entry.is_array()) {
      for (const auto& item : entry) ok = ok && take(item);
    } else {
      ok = take(entry);
    }
    if (!ok) return Outcome::fail("unrecognized candidate label " + entry.dump(), Errc::IncompletePermutation);
    if (tier.empty()) continue;
    for (auto i : tier) {
      if (seen[i]) {
        return Outcome::fail("response_" + std::to_string(i + 1) + " is ranked twice", Errc::IncompletePermutation);
      }
      seen[i] = true;
    }
    r.tiers.push_back(std::move(tier));
  }
  for (std::size_t i = 0; i < candidate_count; ++i) {
    if (!seen[i]) return Outcome::fail("response_" + std::to_string(i + 1) + " is not ranked", Errc::IncompletePermutation);
  }
  if (auto rat = j->find("Rationale"); rat != j->end() && rat->is_string()) r.rationale = rat->get<std::string>();
  return Outcome::ok(std::move(r));
}

void from_json(const Json& j, RankingRecord& r) {
  const auto& ranked = j.at("Ranked Responses");
  std::size_t n = 0;
  for (const auto& e : ranked) n += e.is_array() ? e.size() : 1;
  auto parsed = parse_ranking(j.dump(), n);
  if (!parsed.value) throw Error(Errc::InvalidArgument, "bad ranking record: " + parsed.error);
  r = std::move(*parsed.value);
}

std::string render_candidates(const std::vector<std::string>& candidates) {
  std::string out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i > 0) out += '\n';
    out += "response_" + std::to_string(i + 1) + ": " + candidates[i];
  }
  return out;
}

RankingRecord rank_candidates(const std::vector<Utterance>& context, const std::vector<std::string>& candidates,
                              const ModelEndpoint& judge, const TemplateRegistry& templates) {
  if (candidates.size() < 2) throw Error(Errc::Precondition, "ranking needs at least two candidates");
  if (!judge) throw Error(Errc::Precondition, "ranking needs a judge backend");
  auto request = judge.request(templates.render(
      "response_ranking",
      {{"current_dialogue_context", render_conversation(context)}, {"candidate_responses", render_candidates(candidates)}}));
  auto n = candidates.size();
  return complete_with_reprompts<RankingRecord>(
      *judge.backend, std::move(request), [n](std::string_view reply) { return parse_ranking(reply, n); },
      kJudgeReprompts, templates.get("reprompt_format").body);
}

}  // namespace therasim
