#include "therasim/core/json_text.hpp"
#include "therasim/datasets/datasets.hpp"

namespace therasim {

std::vector<PreferencePair> pairs_from_ranking(const CandidateSet& set, const RankingRecord& ranking,
                                               PairPolicy policy) {
  if (ranking.candidate_count() != set.candidates.size()) {
    throw Error(Errc::Precondition, "ranking does not cover the candidate set");
  }
  std::vector<PreferencePair> out;
  if (ranking.tiers.size() < 2) return out;
  auto first_rejected_tier = policy == PairPolicy::TopVsBottom ? ranking.tiers.size() - 1 : 1;
  std::optional<std::string> rationale;
  if (!ranking.rationale.empty()) rationale = ranking.rationale;
  for (auto chosen : ranking.tiers.front()) {
    for (auto t = first_rejected_tier; t < ranking.tiers.size(); ++t) {
      for (auto rejected : ranking.tiers[t]) {
        out.push_back(make_preference_pair(set.context, set.candidates.at(chosen), set.candidates.at(rejected),
                                           Provenance{Provenance::Kind::JudgeRanking, set.id}, rationale));
      }
    }
  }
  return out;
}

std::string_view to_string(Preferred p) {
  switch (p) {
    case Preferred::A: return "a";
    case Preferred::B: return "b";
    case Preferred::Neither: return "neither";
  }
  return "neither";
}

Preferred preferred_from_string(std::string_view s) {
  if (s == "a") return Preferred::A;
  if (s == "b") return Preferred::B;
  if (s == "neither") return Preferred::Neither;
  throw Error(Errc::InvalidArgument, "preferred must be \"a\", \"b\" or \"neither\"");
}

void validate_annotation(const AnnotationRecord& r) {
  if (trim(r.response_a).empty() || trim(r.response_b).empty()) {
    throw Error(Errc::InvalidArgument, "both responses must be non-empty");
  }
  if (r.response_a == r.response_b) throw Error(Errc::InvalidArgument, "responses a and b are identical");
  if (trim(r.rationale).empty()) throw Error(Errc::InvalidArgument, "rationale is required");
  if (r.reference_rewrite) {
    if (r.preferred != Preferred::Neither) {
      throw Error(Errc::InvalidArgument, "reference_rewrite is only allowed with preferred = \"neither\"");
    }
    if (trim(*r.reference_rewrite).empty()) throw Error(Errc::InvalidArgument, "reference_rewrite is empty");
  }
}

void to_json(Json& j, const AnnotationRecord& r) {
  j = Json{{"schema_version", kSchemaVersion},
           {"id", r.id},
           {"context", r.context},
           {"response_a", r.response_a},
           {"response_b", r.response_b},
           {"preferred", to_string(r.preferred)},
           {"rationale", r.rationale},
           {"reference_rewrite", r.reference_rewrite ? Json(*r.reference_rewrite) : Json(nullptr)}};
}

void from_json(const Json& j, AnnotationRecord& r) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "annotation must be a JSON object");
  check_schema_version(j);
  try {
    r.id = j.value("id", std::string());
    r.context = j.value("context", std::vector<Utterance>{});
    r.response_a = j.at("response_a").get<std::string>();
    r.response_b = j.at("response_b").get<std::string>();
    r.preferred = preferred_from_string(j.at("preferred").get<std::string>());
    r.rationale = j.value("rationale", std::string());
    r.reference_rewrite.reset();
    if (auto it = j.find("reference_rewrite"); it != j.end() && !it->is_null()) {
      r.reference_rewrite = it->get<std::string>();
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad annotation: ") + e.what());
  }
  validate_annotation(r);
}

std::vector<PreferencePair> pairs_from_annotation(const AnnotationRecord& r) {
  validate_annotation(r);
  std::optional<std::string> rationale;
  if (!r.rationale.empty()) rationale = r.rationale;
  Provenance human{Provenance::Kind::HumanAnnotation, r.id.empty() ? std::string("annotation") : r.id};
  switch (r.preferred) {
    case Preferred::A: return {make_preference_pair(r.context, r.response_a, r.response_b, human, rationale)};
    case Preferred::B: return {make_preference_pair(r.context, r.response_b, r.response_a, human, rationale)};
    case Preferred::Neither: break;
  }
  std::vector<PreferencePair> out;
  if (!r.reference_rewrite) return out;
  Provenance rewrite{Provenance::Kind::Rewrite, human.record_id};
  for (const auto* rejected : {&r.response_a, &r.response_b}) {
    if (*rejected == *r.reference_rewrite) continue;
    out.push_back(make_preference_pair(r.context, *r.reference_rewrite, *rejected, rewrite, rationale));
  }
  return out;
}

}  // namespace therasim
