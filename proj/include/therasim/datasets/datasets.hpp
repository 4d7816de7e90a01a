#pragma once

// SFT dialogue synthesis, candidate generation and ranking, preference-pair
// derivation, and JSONL export.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "therasim/backends/backend.hpp"
#include "therasim/backends/templates.hpp"
#include "therasim/core/types.hpp"
#include "therasim/datasets/footer.hpp"

namespace therasim {

inline constexpr std::size_t kMinSftUtterances = 50;
inline constexpr std::size_t kDefaultCandidates = 4;
inline constexpr int kDuplicateRetries = 3;

// ---- SFT ----

struct SftDialogue {
  std::string profile_id;
  std::vector<Utterance> utterances;
  std::vector<StrategyRef> footer_strategies;
  std::vector<std::string> warnings;

  bool operator==(const SftDialogue&) const = default;
};

enum class RejectReason { TooShort, AlternationBroken, NotPatientFirst, NoFooter, EmptyFooter };
std::string_view to_string(RejectReason r);

struct SftRejection {
  std::string profile_id;
  RejectReason reason = RejectReason::TooShort;
  std::string detail;
};

using SftOutcome = std::variant<SftDialogue, SftRejection>;

// Full generation prompt: part 1 (profile analysis, usage counts, catalogs)
// followed by part 2 (requirements, example, footer format).
std::string render_sft_prompt(const PatientProfile& profile, const StrategyCounts& usage,
                              const TemplateRegistry& templates = TemplateRegistry::builtin());

// Splits a generated transcript into utterances. Lines opening with a
// "Patient:" / "Therapist:" / "Doctor:" tag (optionally in bold) start a new
// utterance; other non-empty lines continue the current one. Text before the
// first tag and from the footer on is ignored.
std::vector<Utterance> parse_sft_transcript(std::string_view text);

// Validates a generated transcript; never throws on malformed content.
SftOutcome assess_sft_transcript(std::string_view profile_id, std::string_view text);

SftOutcome build_sft_dialogue(const PatientProfile& profile, const StrategyCounts& usage,
                              const ModelEndpoint& generator,
                              const TemplateRegistry& templates = TemplateRegistry::builtin());

// ---- candidates and ranking ----

struct CandidateSet {
  std::string id;
  std::vector<Utterance> context;  // ends with a patient utterance
  std::vector<std::string> candidates;
  std::vector<std::string> warnings;

  bool operator==(const CandidateSet&) const = default;
};

void to_json(Json& j, const CandidateSet& c);
void from_json(const Json& j, CandidateSet& c);

// k independent therapist completions for the context. A duplicate (after
// trimming) is regenerated up to kDuplicateRetries times and then dropped
// with a warning. Throws Error(TooFewDistinct) when fewer than 2 remain.
CandidateSet generate_candidates(const std::vector<Utterance>& context, std::size_t k, const ModelEndpoint& therapist,
                                 const TemplateRegistry& templates = TemplateRegistry::builtin());

struct RankingRecord {
  std::vector<std::vector<std::size_t>> tiers;  // candidate indices, best tier first
  std::string rationale;

  std::size_t candidate_count() const;
  bool operator==(const RankingRecord&) const = default;
};

void to_json(Json& j, const RankingRecord& r);
void from_json(const Json& j, RankingRecord& r);

// "response_N" labels are 1-based. A nested array is one shared rank. Fails
// with IncompletePermutation when a candidate is missing or repeated.
ParseOutcome<RankingRecord> parse_ranking(std::string_view reply, std::size_t candidate_count);

std::string render_candidates(const std::vector<std::string>& candidates);

RankingRecord rank_candidates(const std::vector<Utterance>& context, const std::vector<std::string>& candidates,
                              const ModelEndpoint& judge,
                              const TemplateRegistry& templates = TemplateRegistry::builtin());

// ---- preference pairs ----

enum class PairPolicy { TopVsBottom, TopVsRest };

// Pairs every top-tier candidate with each candidate the policy selects:
// bottom tier (default) or every lower tier. Tied candidates never pair.
std::vector<PreferencePair> pairs_from_ranking(const CandidateSet& set, const RankingRecord& ranking,
                                               PairPolicy policy = PairPolicy::TopVsBottom);

enum class Preferred { A, B, Neither };
std::string_view to_string(Preferred p);
Preferred preferred_from_string(std::string_view s);

struct AnnotationRecord {
  std::string id;
  std::vector<Utterance> context;
  std::string response_a;
  std::string response_b;
  Preferred preferred = Preferred::Neither;
  std::string rationale;
  std::optional<std::string> reference_rewrite;

  bool operator==(const AnnotationRecord&) const = default;
};

// Throws Error(InvalidArgument) describing the first problem: empty or equal
// responses, empty rationale, or a rewrite attached to an "a"/"b" choice.
void validate_annotation(const AnnotationRecord& r);
void to_json(Json& j, const AnnotationRecord& r);
void from_json(const Json& j, AnnotationRecord& r);

std::vector<PreferencePair> pairs_from_annotation(const AnnotationRecord& r);

// ---- export ----

struct ExportReport {
  std::filesystem::path path;
  std::size_t line_count = 0;
  std::string sha256;
};

Json sft_line(const SftDialogue& d);
SftDialogue sft_from_line(const Json& j);
Json dpo_line(const PreferencePair& p);
PreferencePair dpo_from_line(const Json& j);

// Each writer re-validates its items and replaces the file.
ExportReport export_sft(const std::vector<SftDialogue>& items, const std::filesystem::path& path);
ExportReport export_dpo(const std::vector<PreferencePair>& items, const std::filesystem::path& path);
ExportReport export_rejects(const std::vector<SftRejection>& items, const std::filesystem::path& path);

std::vector<SftDialogue> read_sft(const std::filesystem::path& path);
std::vector<PreferencePair> read_dpo(const std::filesystem::path& path);

// Writes already-serialized lines and reports count and digest.
ExportReport write_jsonl(const std::vector<Json>& lines, const std::filesystem::path& path);
std::vector<Json> read_jsonl(const std::filesystem::path& path);

}  // namespace therasim
