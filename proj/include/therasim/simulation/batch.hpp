#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "therasim/simulation/session.hpp"

namespace therasim {

struct SessionFailure {
  std::string profile_id;
  std::string session_id;
  std::string reason;

  bool operator==(const SessionFailure&) const = default;
};

struct RunManifest {
  std::string run_id;
  Json config;
  std::vector<std::string> session_ids;  // completed sessions, input order
  std::map<Difficulty, std::size_t> difficulty_counts;
  std::vector<SessionFailure> failures;
  std::string content_hash;  // sha256 over the records written by this invocation

  bool operator==(const RunManifest&) const = default;
};

void to_json(Json& j, const RunManifest& m);
void from_json(const Json& j, RunManifest& m);

// Builds fresh backends for one session; called once per session, possibly
// from several threads at once.
using BackendFactory = std::function<SessionBackends(const PatientProfile&)>;

struct BatchResult {
  std::vector<SessionRecord> records;  // sessions run by this call, input order
  RunManifest manifest;
};

// Runs one independent session per profile on up to `parallelism` threads.
// Profiles whose session id is in `completed` are skipped but still listed
// in the manifest. Error-terminated sessions are kept in `records` and listed
// as failures. Throws Error(Precondition) on an empty profile list.
BatchResult run_batch(const std::vector<PatientProfile>& profiles, const SessionConfig& config,
                      const BackendFactory& factory, std::size_t parallelism = 1,
                      const std::set<std::string>& completed = {},
                      const TemplateRegistry& templates = TemplateRegistry::builtin());

}  // namespace therasim
