#include <fstream>

#include "therasim/core/hash.hpp"
#include "therasim/core/validate.hpp"
#include "therasim/datasets/datasets.hpp"
#include "therasim/evaluation/judge.hpp"

namespace therasim {
namespace {

void check_sft(const SftDialogue& d) {
  if (d.utterances.size() < kMinSftUtterances) {
    throw Error(Errc::Precondition, "SFT dialogue for " + d.profile_id + " has fewer than 50 utterances");
  }
  for (std::size_t i = 0; i < d.utterances.size(); ++i) {
    if (d.utterances[i].role != (i % 2 == 0 ? Role::Patient : Role::Therapist)) {
      throw Error(Errc::Precondition, "SFT dialogue for " + d.profile_id + " breaks alternation at " + std::to_string(i));
    }
  }
  if (d.footer_strategies.empty()) throw Error(Errc::Precondition, "SFT dialogue has no footer strategies");
}

}  // namespace

Json sft_line(const SftDialogue& d) {
  Json messages = Json::array();
  for (const auto& u : d.utterances) {
    messages.push_back({{"role", u.role == Role::Patient ? "user" : "assistant"}, {"content", u.text}});
  }
  Json strategies = Json::array();
  for (const auto& s : d.footer_strategies) strategies.push_back(s.display_name());
  return Json{{"messages", messages}, {"strategies", strategies}, {"profile_id", d.profile_id}};
}

SftDialogue sft_from_line(const Json& j) {
  SftDialogue d;
  d.profile_id = j.value("profile_id", std::string());
  for (const auto& m : j.at("messages")) {
    auto role = m.at("role").get<std::string>();
    if (role != "user" && role != "assistant") throw Error(Errc::Corruption, "unknown message role '" + role + "'");
    d.utterances.push_back(Utterance{role == "user" ? Role::Patient : Role::Therapist, m.at("content").get<std::string>(),
                                     d.utterances.size(), {}});
  }
  for (const auto& s : j.at("strategies")) d.footer_strategies.push_back(canonicalize_strategy(s.get<std::string>()));
  return d;
}

Json dpo_line(const PreferencePair& p) {
  Json j{{"prompt", render_conversation(p.context)},
         {"context", p.context},
         {"chosen", p.chosen},
         {"rejected", p.rejected},
         {"provenance", p.provenance}};
  if (p.rationale) j["rationale"] = *p.rationale;
  return j;
}

PreferencePair dpo_from_line(const Json& j) {
  std::optional<std::string> rationale;
  if (auto it = j.find("rationale"); it != j.end() && !it->is_null()) rationale = it->get<std::string>();
  return make_preference_pair(j.at("context").get<std::vector<Utterance>>(), j.at("chosen").get<std::string>(),
                              j.at("rejected").get<std::string>(), j.at("provenance").get<Provenance>(),
                              std::move(rationale));
}

ExportReport write_jsonl(const std::vector<Json>& lines, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::string body;
  for (const auto& line : lines) {
    body += line.dump();
    body += '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << body;
  out.close();
  if (!out) throw Error(Errc::Io, "failed writing " + path.string());
  return ExportReport{path, lines.size(), sha256_hex(body)};
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::vector<Json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception&) {
      throw Error(Errc::Corruption, path.string() + ":" + std::to_string(n) + ": not valid JSON");
    }
  }
  return out;
}

ExportReport export_sft(const std::vector<SftDialogue>& items, const std::filesystem::path& path) {
  std::vector<Json> lines;
  for (const auto& d : items) {
    check_sft(d);
    lines.push_back(sft_line(d));
  }
  return write_jsonl(lines, path);
}

ExportReport export_dpo(const std::vector<PreferencePair>& items, const std::filesystem::path& path) {
  std::vector<Json> lines;
  for (const auto& p : items) {
    if (p.chosen == p.rejected) throw Error(Errc::Precondition, "preference pair with chosen == rejected");
    if (p.provenance.record_id.empty()) throw Error(Errc::Precondition, "preference pair without provenance");
    lines.push_back(dpo_line(p));
  }
  return write_jsonl(lines, path);
}

ExportReport export_rejects(const std::vector<SftRejection>& items, const std::filesystem::path& path) {
  std::vector<Json> lines;
  for (const auto& r : items) {
    lines.push_back({{"profile_id", r.profile_id}, {"reason", to_string(r.reason)}, {"detail", r.detail}});
  }
  return write_jsonl(lines, path);
}

std::vector<SftDialogue> read_sft(const std::filesystem::path& path) {
  std::vector<SftDialogue> out;
  for (const auto& j : read_jsonl(path)) out.push_back(sft_from_line(j));
  return out;
}

std::vector<PreferencePair> read_dpo(const std::filesystem::path& path) {
  std::vector<PreferencePair> out;
  for (const auto& j : read_jsonl(path)) out.push_back(dpo_from_line(j));
  return out;
}

}  // namespace therasim
