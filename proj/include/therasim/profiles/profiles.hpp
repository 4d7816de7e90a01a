#pragma once

// Raw narrative posts -> privacy-filtered extraction records -> synthesized
// patient profiles, plus descriptive corpus statistics.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "therasim/backends/backend.hpp"
#include "therasim/backends/templates.hpp"
#include "therasim/core/types.hpp"

namespace therasim {

inline constexpr int kMaxReprompts = 3;

struct RawPost {
  std::string author_id;
  std::string text;
  bool is_main = false;  // explicitly about substance use; supplied by the input

  bool operator==(const RawPost&) const = default;
};

void to_json(Json& j, const RawPost& p);
void from_json(const Json& j, RawPost& p);

// --- redaction -------------------------------------------------------------

enum class RedactionPass { Pattern, Backend };

inline constexpr std::string_view kEmailToken = "[EMAIL]";
inline constexpr std::string_view kUrlToken = "[URL]";
inline constexpr std::string_view kHandleToken = "[HANDLE]";
inline constexpr std::string_view kPhoneToken = "[PHONE]";
inline constexpr std::string_view kNameToken = "[NAME]";
inline constexpr std::string_view kLocationToken = "[LOCATION]";

struct RedactionSpan {
  std::size_t offset = 0;  // byte offset in the text the pass ran over
  std::string original;
  std::string token;
  RedactionPass pass = RedactionPass::Pattern;

  bool operator==(const RedactionSpan&) const = default;
};

struct RedactionResult {
  std::string text;
  std::vector<RedactionSpan> report;
  bool partial = false;  // backend pass failed; only the pattern pass applied
  std::string backend_error;
};

// Deterministic pass over emails, URLs, @/u/ handles and phone-like digit
// runs. Idempotent; bytes outside the reported spans are untouched.
std::string redact_patterns(std::string_view text, std::vector<RedactionSpan>* report = nullptr);

// Pattern pass followed by a backend-prompted pass that names further spans
// (people, places). Backend failures leave a partial result rather than
// throwing. A null endpoint runs the pattern pass only.
RedactionResult redact_pii(std::string_view text, const ModelEndpoint& backend,
                           const TemplateRegistry& templates = TemplateRegistry::builtin());

// --- extraction ------------------------------------------------------------

struct ExtractionRecord {
  std::optional<std::string> personality_traits;
  std::optional<std::string> substance_use_history;
  std::optional<std::string> significant_life_events;
  std::optional<std::string> behavioral_themes;
  std::optional<std::string> motivations;

  // The five wire keys, in field order.
  static const std::array<std::string_view, 5>& keys();
  std::array<const std::optional<std::string>*, 5> fields() const;
  std::array<std::optional<std::string>*, 5> fields();
  bool empty() const;

  bool operator==(const ExtractionRecord&) const = default;
};

void to_json(Json& j, const ExtractionRecord& r);
// Parses a model reply holding the five-key object. Absent keys, JSON null,
// empty strings and the text "null" all map to a null field.
ParseOutcome<ExtractionRecord> parse_extraction(std::string_view reply);

// Requires an already-redacted post (the pattern pass must be a no-op).
ExtractionRecord extract_fields(const RawPost& post, const ModelEndpoint& backend,
                                const TemplateRegistry& templates = TemplateRegistry::builtin());

// Merges per-author records into one profile. One record is copied as is;
// several go through a synthesis call, after which any field present in some
// record but dropped by the model is filled from the records. The id is a
// content hash of the fields and difficulty.
PatientProfile synthesize_profile(std::span<const ExtractionRecord> records, Difficulty difficulty,
                                  const ModelEndpoint& backend,
                                  const TemplateRegistry& templates = TemplateRegistry::builtin());

std::string profile_content_id(const PatientProfile& profile);

// Difficulty by quota: the first `per_level` profiles Easy, the next Medium,
// the rest Hard. per_level == 0 cycles Easy, Medium, Hard.
Difficulty assign_difficulty(std::size_t index, std::size_t per_level);

// --- corpus statistics -----------------------------------------------------

struct CorpusStats {
  std::size_t author_count = 0;
  std::size_t post_count = 0;
  std::size_t main_post_count = 0;
  std::size_t conversation_count = 0;
  std::size_t total_turns = 0;
  double avg_posts_per_author = 0.0;
  double avg_main_posts_per_author = 0.0;
  double avg_turns_per_conversation = 0.0;

  bool operator==(const CorpusStats&) const = default;
};

// Streaming fold; lets very large corpora be summarized without holding
// every record.
class CorpusStatsAccumulator {
 public:
  void add_post(std::string_view author_id, bool is_main);
  void add_conversation(std::size_t turns);
  CorpusStats result() const;

 private:
  std::unordered_set<std::string> authors_;
  std::size_t posts_ = 0;
  std::size_t main_posts_ = 0;
  std::size_t conversations_ = 0;
  std::size_t turns_ = 0;
};

CorpusStats corpus_stats(std::span<const RawPost> posts, std::span<const SessionRecord> sessions);

Json stats_to_json(const CorpusStats& stats);
std::string render_stats_table(const CorpusStats& stats);

}  // namespace therasim
