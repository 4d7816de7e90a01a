#include <cstdio>

#include "therasim/profiles/profiles.hpp"

namespace therasim {

void CorpusStatsAccumulator::add_post(std::string_view author_id, bool is_main) {
  authors_.emplace(author_id);
  ++posts_;
  if (is_main) ++main_posts_;
}

void CorpusStatsAccumulator::add_conversation(std::size_t turns) {
  ++conversations_;
  turns_ += turns;
}

CorpusStats CorpusStatsAccumulator::result() const {
  CorpusStats s;
  s.author_count = authors_.size();
  s.post_count = posts_;
  s.main_post_count = main_posts_;
  s.conversation_count = conversations_;
  s.total_turns = turns_;
  if (s.author_count > 0) {
    s.avg_posts_per_author = static_cast<double>(posts_) / static_cast<double>(s.author_count);
    s.avg_main_posts_per_author = static_cast<double>(main_posts_) / static_cast<double>(s.author_count);
  }
  if (conversations_ > 0) {
    s.avg_turns_per_conversation = static_cast<double>(turns_) / static_cast<double>(conversations_);
  }
  return s;
}

CorpusStats corpus_stats(std::span<const RawPost> posts, std::span<const SessionRecord> sessions) {
  CorpusStatsAccumulator acc;
  for (const auto& p : posts) acc.add_post(p.author_id, p.is_main);
  for (const auto& s : sessions) acc.add_conversation(s.utterances.size());
  return acc.result();
}

Json stats_to_json(const CorpusStats& s) {
  return Json{{"schema_version", kSchemaVersion},
              {"author_count", s.author_count},
              {"post_count", s.post_count},
              {"main_post_count", s.main_post_count},
              {"conversation_count", s.conversation_count},
              {"total_turns", s.total_turns},
              {"avg_posts_per_author", s.avg_posts_per_author},
              {"avg_main_posts_per_author", s.avg_main_posts_per_author},
              {"avg_turns_per_conversation", s.avg_turns_per_conversation}};
}

std::string render_stats_table(const CorpusStats& s) {
  auto with_commas = [](std::size_t n) {
    auto digits = std::to_string(n);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (i > 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
      out.push_back(digits[i]);
    }
    return out;
  };
  auto fixed2 = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::string out;
  auto row = [&out](std::string_view label, const std::string& value) {
    out += label;
    out.append(label.size() < 32 ? 32 - label.size() : 1, ' ');
    out += value;
    out += '\n';
  };
  row("#Authors", with_commas(s.author_count));
  row("AVG. #Posts Per Author", fixed2(s.avg_posts_per_author));
  row("AVG. #Main Posts Per Author", fixed2(s.avg_main_posts_per_author));
  row("#Conversations", with_commas(s.conversation_count));
  row("AVG. #Turns Per Conversation", fixed2(s.avg_turns_per_conversation));
  return out;
}

}  // namespace therasim
