#include <algorithm>
#include <cctype>

#include "therasim/core/json_text.hpp"
#include "therasim/datasets/datasets.hpp"
#include "therasim/simulation/session.hpp"

namespace therasim {
namespace {

struct Tag {
  std::string_view text;
  Role role;
};

// Longest tags first so "**patient:**" wins over "patient:".
constexpr std::array<Tag, 9> kTags{{{"**patient:**", Role::Patient},
                                    {"**patient**:", Role::Patient},
                                    {"patient:", Role::Patient},
                                    {"**therapist:**", Role::Therapist},
                                    {"**therapist**:", Role::Therapist},
                                    {"therapist:", Role::Therapist},
                                    {"**doctor:**", Role::Therapist},
                                    {"**doctor**:", Role::Therapist},
                                    {"doctor:", Role::Therapist}}};

std::optional<std::pair<Role, std::size_t>> speaker_tag(std::string_view line) {
  std::string head(line.substr(0, 16));
  std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const auto& tag : kTags) {
    if (head.starts_with(tag.text)) return std::pair{tag.role, tag.text.size()};
  }
  return std::nullopt;
}

SftRejection reject(std::string_view profile_id, RejectReason reason, std::string detail) {
  return SftRejection{std::string(profile_id), reason, std::move(detail)};
}

}  // namespace

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::TooShort: return "too_short";
    case RejectReason::AlternationBroken: return "alternation_broken";
    case RejectReason::NotPatientFirst: return "not_patient_first";
    case RejectReason::NoFooter: return "no_footer";
    case RejectReason::EmptyFooter: return "empty_footer";
  }
  return "too_short";
}

std::string render_sft_prompt(const PatientProfile& profile, const StrategyCounts& usage,
                              const TemplateRegistry& templates) {
  auto analysis = render_profile(profile);
  if (!analysis.empty() && analysis.back() == '\n') analysis.pop_back();
  auto part1 = templates.render("sft_generation_part1", {{"user_analysis", analysis},
                                                         {"usage_counts", render_usage_counts(usage, templates)},
                                                         {"actionable_strategies", render_actionable_catalog()}});
  return part1 + "\n\n" + templates.get("sft_generation_part2").body;
}

std::vector<Utterance> parse_sft_transcript(std::string_view text) {
  std::vector<Utterance> out;
  auto footer = find_strategy_footer(text);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    auto line = trim(text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    if (footer && line_no == footer->line_index) break;
    if (auto tag = speaker_tag(line)) {
      out.push_back(Utterance{tag->first, std::string(trim(line.substr(tag->second))), out.size(), {}});
    } else if (!line.empty() && !out.empty()) {
      auto& current = out.back().text;
      if (!current.empty()) current.push_back(' ');
      current.append(line);
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
    ++line_no;
  }
  return out;
}

SftOutcome assess_sft_transcript(std::string_view profile_id, std::string_view text) {
  auto footer = find_strategy_footer(text);
  if (!footer) return reject(profile_id, RejectReason::NoFooter, "no **Strategies:** line");
  auto utterances = parse_sft_transcript(text);
  if (!utterances.empty() && utterances.front().role != Role::Patient) {
    return reject(profile_id, RejectReason::NotPatientFirst, "first utterance is the therapist's");
  }
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    auto expected = i % 2 == 0 ? Role::Patient : Role::Therapist;
    if (utterances[i].role != expected) {
      return reject(profile_id, RejectReason::AlternationBroken,
                    "utterance " + std::to_string(i) + " repeats the previous speaker");
    }
    if (utterances[i].text.empty()) {
      return reject(profile_id, RejectReason::AlternationBroken, "utterance " + std::to_string(i) + " is empty");
    }
  }
  if (utterances.size() < kMinSftUtterances) {
    return reject(profile_id, RejectReason::TooShort,
                  std::to_string(utterances.size()) + " utterances, need " + std::to_string(kMinSftUtterances));
  }
  if (footer->strategies.empty()) {
    return reject(profile_id, RejectReason::EmptyFooter, "footer names no known strategy");
  }
  SftDialogue d;
  d.profile_id = std::string(profile_id);
  d.utterances = std::move(utterances);
  d.footer_strategies = std::move(footer->strategies);
  d.warnings = std::move(footer->warnings);
  if (footer->lists_actionable) d.warnings.push_back("footer lists actionable strategies");
  return d;
}

SftOutcome build_sft_dialogue(const PatientProfile& profile, const StrategyCounts& usage,
                              const ModelEndpoint& generator, const TemplateRegistry& templates) {
  if (profile.id.empty()) throw Error(Errc::Precondition, "profile has no id");
  if (!generator) throw Error(Errc::Precondition, "SFT generation needs a backend");
  return assess_sft_transcript(profile.id, generator.ask(render_sft_prompt(profile, usage, templates)));
}

}  // namespace therasim
