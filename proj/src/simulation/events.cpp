#include <array>
#include <span>

#include "therasim/core/error.hpp"
#include "therasim/simulation/session.hpp"

namespace therasim {
namespace {

struct CategoryWeight {
  EventCategory category;
  double weight;
};

// Cumulative draw over these weights; they sum to 1.
constexpr std::array<CategoryWeight, 5> kWeights{{{EventCategory::JobLoss, 0.20},
                                                  {EventCategory::RelationshipBreakdown, 0.20},
                                                  {EventCategory::PeerPressure, 0.25},
                                                  {EventCategory::Stressor, 0.25},
                                                  {EventCategory::Other, 0.10}}};

struct EventText {
  std::string_view label;  // only used for Other
  std::string_view description;
};

std::span<const EventText> texts_for(EventCategory c) {
  static constexpr std::array<EventText, 3> job{{
      {"", "You were told today that you are losing your job; the company is letting you go at the end of the week."},
      {"", "Your hours at work were cut drastically and you are not sure you can pay rent this month."},
      {"", "You were fired after showing up late again, and you are ashamed to tell anyone."},
  }};
  static constexpr std::array<EventText, 3> relationship{{
      {"", "Your partner moved out last night after a long argument about your using."},
      {"", "A close friend stopped answering your messages and you feel abandoned."},
      {"", "Your family told you they need space from you for a while."},
  }};
  static constexpr std::array<EventText, 3> peers{{
      {"", "Old friends you used with invited you to a party this weekend and keep texting you."},
      {"", "A coworker offered you something to take the edge off after a rough shift."},
      {"", "Your roommate started using at home again and offered to share."},
  }};
  static constexpr std::array<EventText, 3> stress{{
      {"", "An unexpected bill arrived that you cannot afford, and money worries are keeping you up at night."},
      {"", "You have a court date coming up and the uncertainty is overwhelming."},
      {"", "You have barely slept this week and everything feels harder to handle."},
  }};
  static constexpr std::array<EventText, 3> other{{
      {"health scare", "A doctor's appointment raised concerns about your liver and you are frightened."},
      {"housing", "Your landlord announced the building is being sold and you may need to move."},
      {"bereavement", "You learned that someone you used to use with has died of an overdose."},
  }};
  switch (c) {
    case EventCategory::JobLoss: return job;
    case EventCategory::RelationshipBreakdown: return relationship;
    case EventCategory::PeerPressure: return peers;
    case EventCategory::Stressor: return stress;
    case EventCategory::Other: return other;
  }
  return stress;
}

}  // namespace

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

EnvironmentEvent draw_event(std::mt19937_64& rng, std::size_t utterance_index) {
  double u = uniform01(rng);
  EventCategory category = kWeights.back().category;
  double acc = 0.0;
  for (const auto& w : kWeights) {
    acc += w.weight;
    if (u < acc) {
      category = w.category;
      break;
    }
  }
  auto options = texts_for(category);
  const auto& pick = options[static_cast<std::size_t>(rng() % options.size())];
  EnvironmentEvent e;
  e.category = category;
  e.other_label = std::string(pick.label);
  e.description = std::string(pick.description);
  e.injected_at_turn = utterance_index;
  return e;
}

std::optional<EnvironmentEvent> maybe_inject_event(PatientMemory& memory, std::size_t patient_turn,
                                                   std::size_t utterance_index, const SessionConfig& config,
                                                   std::mt19937_64& rng) {
  if (utterance_index >= config.max_utterances) {
    throw Error(Errc::Precondition, "event turn is beyond the utterance cap");
  }
  if (!config.environment_enabled || config.event_period_k == 0 || patient_turn == 0 ||
      patient_turn % config.event_period_k != 0) {
    return std::nullopt;
  }
  if (!(uniform01(rng) < config.event_probability)) return std::nullopt;
  auto event = draw_event(rng, utterance_index);
  memory.append({MemoryKind::EnvironmentalInfluence, event.description, utterance_index});
  return event;
}

}  // namespace therasim
