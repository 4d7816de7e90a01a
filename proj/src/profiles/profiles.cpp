#include <algorithm>
#include <cctype>

#include "therasim/core/hash.hpp"
#include "therasim/core/json_text.hpp"
#include "therasim/profiles/profiles.hpp"

namespace therasim {

void to_json(Json& j, const RawPost& p) {
  j = Json{{"author_id", p.author_id}, {"text", p.text}, {"is_main", p.is_main}};
}

void from_json(const Json& j, RawPost& p) {
  if (!j.is_object() || !j.contains("author_id") || !j.contains("text")) {
    throw Error(Errc::InvalidArgument, "post needs author_id and text");
  }
  p.author_id = j.at("author_id").get<std::string>();
  p.text = j.at("text").get<std::string>();
  p.is_main = j.value("is_main", false);
  if (p.text.empty()) throw Error(Errc::InvalidArgument, "post text is empty");
}

const std::array<std::string_view, 5>& ExtractionRecord::keys() {
  static const std::array<std::string_view, 5> k{"Personality Traits", "Substance Use History",
                                                 "Significant Life Events", "Behavioral Themes",
                                                 "Motivations for Substance Use"};
  return k;
}

std::array<const std::optional<std::string>*, 5> ExtractionRecord::fields() const {
  return {&personality_traits, &substance_use_history, &significant_life_events, &behavioral_themes, &motivations};
}

std::array<std::optional<std::string>*, 5> ExtractionRecord::fields() {
  return {&personality_traits, &substance_use_history, &significant_life_events, &behavioral_themes, &motivations};
}

bool ExtractionRecord::empty() const {
  auto f = fields();
  return std::none_of(f.begin(), f.end(), [](const auto* v) { return v->has_value(); });
}

void to_json(Json& j, const ExtractionRecord& r) {
  j = Json::object();
  auto f = r.fields();
  for (std::size_t i = 0; i < f.size(); ++i) {
    j[std::string(ExtractionRecord::keys()[i])] = *f[i] ? Json(**f[i]) : Json(nullptr);
  }
}

ParseOutcome<ExtractionRecord> parse_extraction(std::string_view reply) {
  using Outcome = ParseOutcome<ExtractionRecord>;
  auto j = extract_json_object(reply);
  if (!j) return Outcome::fail("no JSON object in reply");
  ExtractionRecord record;
  auto f = record.fields();
  std::size_t present = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto it = j->find(std::string(ExtractionRecord::keys()[i]));
    if (it == j->end()) continue;
    ++present;
    if (it->is_null()) continue;
    if (!it->is_string()) {
      return Outcome::fail("field \"" + std::string(ExtractionRecord::keys()[i]) + "\" must be a string or null");
    }
    auto value = std::string(trim(it->get_ref<const std::string&>()));
    std::string lowered = value;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), [](unsigned char c) { return std::tolower(c); });
    if (value.empty() || lowered == "null") continue;
    *f[i] = std::move(value);
  }
  if (present == 0) return Outcome::fail("none of the five profile keys is present");
  return Outcome::ok(std::move(record));
}

ExtractionRecord extract_fields(const RawPost& post, const ModelEndpoint& backend,
                                const TemplateRegistry& templates) {
  if (post.text.empty()) throw Error(Errc::Precondition, "post text is empty");
  if (redact_patterns(post.text) != post.text) {
    throw Error(Errc::Precondition, "post has not been redacted");
  }
  if (!backend) throw Error(Errc::Precondition, "extraction needs a backend");
  auto request = backend.request(templates.render("profile_extraction", {{"reddit_post", post.text}}));
  return complete_with_reprompts<ExtractionRecord>(*backend.backend, std::move(request), parse_extraction,
                                                   kMaxReprompts, templates.get("reprompt_format").body);
}

std::string profile_content_id(const PatientProfile& p) {
  auto opt = [](const std::optional<std::string>& v) { return v ? Json(*v) : Json(nullptr); };
  Json canonical = Json::array({opt(p.personality_traits), opt(p.substance_use_history),
                                opt(p.significant_life_events), opt(p.behavioral_themes), opt(p.motivations),
                                std::string(to_string(p.difficulty))});
  return content_id("p-", canonical.dump());
}

PatientProfile synthesize_profile(std::span<const ExtractionRecord> records, Difficulty difficulty,
                                  const ModelEndpoint& backend, const TemplateRegistry& templates) {
  if (records.empty()) throw Error(Errc::EmptyInput, "no extraction records to synthesize");
  if (std::all_of(records.begin(), records.end(), [](const auto& r) { return r.empty(); })) {
    throw Error(Errc::EmptyInput, "every extraction record is empty");
  }

  ExtractionRecord merged;
  if (records.size() == 1) {
    merged = records.front();
  } else {
    if (!backend) throw Error(Errc::Precondition, "synthesis of several records needs a backend");
    Json listing = Json::array();
    for (const auto& r : records) listing.push_back(r);
    auto request = backend.request(templates.render("profile_synthesis", {{"records", listing.dump(2)}}));
    merged = complete_with_reprompts<ExtractionRecord>(*backend.backend, std::move(request), parse_extraction,
                                                       kMaxReprompts, templates.get("reprompt_format").body);
    // Union coverage: a field any record mentions must survive the merge.
    auto out = merged.fields();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i]->has_value()) continue;
      std::string joined;
      for (const auto& r : records) {
        const auto* v = r.fields()[i];
        if (!v->has_value()) continue;
        if (!joined.empty()) joined += "; ";
        joined += **v;
      }
      if (!joined.empty()) *out[i] = std::move(joined);
    }
  }

  PatientProfile profile;
  profile.personality_traits = merged.personality_traits;
  profile.substance_use_history = merged.substance_use_history;
  profile.significant_life_events = merged.significant_life_events;
  profile.behavioral_themes = merged.behavioral_themes;
  profile.motivations = merged.motivations;
  profile.difficulty = difficulty;
  profile.id = profile_content_id(profile);
  return profile;
}

Difficulty assign_difficulty(std::size_t index, std::size_t per_level) {
  if (per_level == 0) return kAllDifficulties[index % kAllDifficulties.size()];
  auto tier = std::min<std::size_t>(index / per_level, kAllDifficulties.size() - 1);
  return kAllDifficulties[tier];
}

}  // namespace therasim
