#include "therasim/core/catalog.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include "therasim/core/error.hpp"

namespace therasim {
namespace {

constexpr std::array<FrameworkInfo, kFrameworkCount> kFrameworks{{
    {Framework::MI, "MI", "Motivational Interviewing", "MI",
     "Explore the individual's values and goals to ignite their motivation for change."},
    {Framework::CBT, "CBT", "Cognitive Behavioral Therapy", "CBT",
     "Identify and modify negative thought patterns and behaviors linked to substance use."},
    {Framework::SFBT, "SFBT", "Solution-Focused Brief Therapy", "SFBT",
     "Focus on the individual's strengths and past successes to achieve their recovery goals."},
    {Framework::PeerSupport, "Peer Support Programs", "Peer Support Programs", "",
     "Leverage group support or mutual-help networks to foster accountability and a sense of belonging."},
    {Framework::MBI, "MBIs", "Mindfulness-Based Interventions", "MBIs",
     "Incorporate mindfulness practices to improve emotional regulation and reduce cravings."},
    {Framework::BA, "BA", "Behavioral Activation", "BA",
     "Promote engaging in meaningful activities to replace substance-related behaviors."},
    {Framework::RelapsePrevention, "Relapse Prevention Strategies", "Relapse Prevention Strategies", "",
     "Develop skills to recognize triggers and implement coping mechanisms to avoid relapse."},
    {Framework::StrengthBased, "Strength-Based Approach", "Strength-Based Approach", "",
     "Highlight the individual's resilience and personal resources to empower recovery efforts."},
    {Framework::Psychoeducation, "Psychoeducation on Addiction and Recovery",
     "Psychoeducation on Addiction and Recovery", "",
     "Educate the individual about the effects of substances and the benefits of recovery."},
    {Framework::HarmReduction, "Harm Reduction Framework", "Harm Reduction Framework", "",
     "Provide strategies to minimize immediate harm while working towards cessation."},
    {Framework::FamilySocialSupport, "Family and Social Support Involvement",
     "Family and Social Support Involvement", "",
     "Engage family or trusted individuals in the process to strengthen the support network."},
    {Framework::SelfCompassion, "Self-Compassion Practices", "Self-Compassion Practices", "",
     "Encourage self-kindness to build confidence and reduce guilt associated with substance use."},
    {Framework::CopingSkills, "Coping Skill Development", "Coping Skill Development", "",
     "Equip the individual with practical skills to manage stress, anxiety, and other challenges without "
     "substances."},
}};

constexpr std::array<ActionableInfo, kActionableCount> kActionable{{
    {1, "Explore specific hobbies or interests the patient can engage in to replace addictive behaviors "
        "(e.g., art, sports, volunteering)."},
    {2, "Develop a structured daily routine to bring stability and reduce idle time that might trigger "
        "relapse."},
    {3, "Introduce grounding techniques such as sensory exercises or physical activities to manage anxiety "
        "or cravings."},
    {4, "Suggest joining a support group or community to build social connections with individuals on "
        "similar journeys."},
    {5, "Provide psychoeducation on how addiction affects the brain and emotional regulation."},
    {6, "Work on identifying and addressing specific emotional triggers through reflective exercises."},
    {7, "Practice assertive communication techniques for setting boundaries with peers or environments that "
        "encourage substance use."},
    {8, "Encourage the patient to journal their thoughts and emotions as a way to process experiences and "
        "identify patterns related to cravings or triggers."},
    {9, "Introduce relaxation techniques such as progressive muscle relaxation or guided imagery to "
        "alleviate stress and improve emotional well-being."},
    {10, "Help the patient set short-term and long-term goals to maintain focus and motivation during their "
         "recovery journey."},
    {11, "Explore mindfulness-based activities like meditation, yoga, or tai chi to promote self-awareness "
         "and emotional regulation."},
    {12, "Identify and reinforce the patient’s personal strengths and past successes to build confidence "
         "in their ability to overcome challenges."},
    {13, "Provide education on the importance of nutrition, sleep, and exercise in supporting recovery and "
         "overall health."},
    {14, "Develop a crisis plan for managing high-risk situations or moments of intense cravings, including "
         "a list of emergency contacts and actions."},
    {15, "Encourage the patient to create a vision board or list of positive outcomes they hope to achieve "
         "through recovery as a source of inspiration."},
    {16, "Discuss the concept of gratitude and suggest keeping a gratitude journal to focus on positive "
         "aspects of life and maintain perspective."},
    {17, "Offer resources or referrals for complementary therapies, such as art therapy, music therapy, or "
         "animal-assisted therapy, to enhance emotional support."},
    {18, "Support the patient in finding meaningful ways to contribute to their community, such as "
         "mentoring, advocacy, or local initiatives, to foster a sense of purpose."},
}};

// Explicit short forms seen in prompts and footers. Exact matches only.
constexpr std::array<std::pair<std::string_view, Framework>, 5> kAliases{{
    {"harm reduction", Framework::HarmReduction},
    {"relapse prevention", Framework::RelapsePrevention},
    {"psychoeducation", Framework::Psychoeducation},
    {"mbi", Framework::MBI},
    {"strengths-based approach", Framework::StrengthBased},
}};

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

const std::map<std::string, StrategyRef, std::less<>>& lookup_table() {
  static const auto table = [] {
    std::map<std::string, StrategyRef, std::less<>> t;
    for (const auto& f : kFrameworks) {
      auto ref = StrategyRef::framework(f.id);
      t.emplace(normalize(f.key), ref);
      t.emplace(normalize(f.full_name), ref);
      if (!f.acronym.empty()) t.emplace(normalize(f.acronym), ref);
      t.emplace(normalize(ref.display_name()), ref);
    }
    for (const auto& [alias, f] : kAliases) t.emplace(std::string(alias), StrategyRef::framework(f));
    for (const auto& a : kActionable) {
      auto ref = StrategyRef::actionable(a.id);
      auto n = std::to_string(a.id);
      t.emplace(normalize(a.description), ref);
      t.emplace("actionable-" + n, ref);
      t.emplace("actionable strategy " + n, ref);
      t.emplace("strategy " + n, ref);
      t.emplace("#" + n, ref);
    }
    return t;
  }();
  return table;
}

std::optional<StrategyRef> find(std::string_view normalized) {
  const auto& table = lookup_table();
  if (auto it = table.find(normalized); it != table.end()) return it->second;
  return std::nullopt;
}

}  // namespace

std::span<const FrameworkInfo> frameworks() { return kFrameworks; }
std::span<const ActionableInfo> actionable_strategies() { return kActionable; }

StrategyRef StrategyRef::actionable(int id) {
  if (id < 1 || id > kActionableCount) {
    throw Error(Errc::InvalidArgument, "actionable strategy id out of range: " + std::to_string(id));
  }
  return StrategyRef(Kind::Actionable, id);
}

Framework StrategyRef::as_framework() const {
  if (kind_ != Kind::Framework) throw Error(Errc::InvalidArgument, "not a framework reference");
  return static_cast<Framework>(value_);
}

int StrategyRef::actionable_id() const {
  if (kind_ != Kind::Actionable) throw Error(Errc::InvalidArgument, "not an actionable strategy reference");
  return value_;
}

std::string StrategyRef::key() const {
  if (is_framework()) return std::string(kFrameworks[static_cast<std::size_t>(value_)].key);
  return "Actionable-" + std::to_string(value_);
}

std::string StrategyRef::display_name() const {
  if (is_framework()) {
    const auto& f = kFrameworks[static_cast<std::size_t>(value_)];
    if (f.acronym.empty()) return std::string(f.full_name);
    return std::string(f.full_name) + " (" + std::string(f.acronym) + ")";
  }
  return "Actionable Strategy " + std::to_string(value_);
}

std::string_view StrategyRef::description() const {
  if (is_framework()) return kFrameworks[static_cast<std::size_t>(value_)].description;
  return kActionable[static_cast<std::size_t>(value_ - 1)].description;
}

std::vector<StrategyRef> all_strategies() {
  std::vector<StrategyRef> out;
  out.reserve(kFrameworkCount + kActionableCount);
  for (const auto& f : kFrameworks) out.push_back(StrategyRef::framework(f.id));
  for (const auto& a : kActionable) out.push_back(StrategyRef::actionable(a.id));
  return out;
}

std::optional<StrategyRef> try_canonicalize_strategy(std::string_view label) {
  auto norm = normalize(label);
  if (norm.empty()) return std::nullopt;
  if (auto hit = find(norm)) return hit;

  // Trailing parenthetical: "Motivational Interviewing (MI)".
  if (norm.back() == ')') {
    auto open = norm.rfind('(');
    if (open != std::string::npos && open > 0) {
      auto base = normalize(std::string_view(norm).substr(0, open));
      if (auto hit = find(base)) return hit;
      auto inner = normalize(std::string_view(norm).substr(open + 1, norm.size() - open - 2));
      if (auto hit = find(inner)) return hit;
    }
  }
  return std::nullopt;
}

StrategyRef canonicalize_strategy(std::string_view label) {
  if (normalize(label).empty()) throw Error(Errc::Precondition, "strategy label is empty");
  if (auto hit = try_canonicalize_strategy(label)) return *hit;
  throw Error(Errc::UnknownStrategy, "no catalog entry matches '" + std::string(label) + "'");
}

std::optional<StrategyRef> strategy_from_key(std::string_view key) {
  for (const auto& f : kFrameworks) {
    if (f.key == key) return StrategyRef::framework(f.id);
  }
  constexpr std::string_view prefix = "Actionable-";
  if (key.starts_with(prefix)) {
    auto digits = key.substr(prefix.size());
    if (digits.empty() || digits.size() > 2 ||
        !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::nullopt;
    }
    int id = std::stoi(std::string(digits));
    if (id >= 1 && id <= kActionableCount) return StrategyRef::actionable(id);
  }
  return std::nullopt;
}

}  // namespace therasim
