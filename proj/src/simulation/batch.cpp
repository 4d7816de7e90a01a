#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>

#include "therasim/core/hash.hpp"
#include "therasim/simulation/batch.hpp"

namespace therasim {

void to_json(Json& j, const RunManifest& m) {
  Json counts = Json::object();
  for (auto d : kAllDifficulties) {
    auto it = m.difficulty_counts.find(d);
    counts[std::string(to_string(d))] = it == m.difficulty_counts.end() ? 0 : it->second;
  }
  Json failures = Json::array();
  for (const auto& f : m.failures) {
    failures.push_back({{"profile_id", f.profile_id}, {"session_id", f.session_id}, {"reason", f.reason}});
  }
  j = Json{{"schema_version", kSchemaVersion},
           {"run_id", m.run_id},
           {"config", m.config},
           {"session_ids", m.session_ids},
           {"difficulty_counts", counts},
           {"failures", failures},
           {"content_hash", m.content_hash}};
}

void from_json(const Json& j, RunManifest& m) {
  check_schema_version(j);
  m.run_id = j.at("run_id").get<std::string>();
  m.config = j.value("config", Json::object());
  m.session_ids = j.at("session_ids").get<std::vector<std::string>>();
  m.difficulty_counts.clear();
  for (const auto& [k, v] : j.at("difficulty_counts").items()) {
    auto n = v.get<std::size_t>();
    if (n > 0) m.difficulty_counts[difficulty_from_string(k)] = n;
  }
  m.failures.clear();
  for (const auto& f : j.at("failures")) {
    m.failures.push_back({f.at("profile_id").get<std::string>(), f.at("session_id").get<std::string>(),
                          f.at("reason").get<std::string>()});
  }
  m.content_hash = j.at("content_hash").get<std::string>();
  std::size_t counted = 0;
  for (const auto& [d, n] : m.difficulty_counts) counted += n;
  if (counted != m.session_ids.size()) throw Error(Errc::Corruption, "manifest counts disagree with its session ids");
}

BatchResult run_batch(const std::vector<PatientProfile>& profiles, const SessionConfig& config,
                      const BackendFactory& factory, std::size_t parallelism, const std::set<std::string>& completed,
                      const TemplateRegistry& templates) {
  if (profiles.empty()) throw Error(Errc::Precondition, "run_batch needs at least one profile");
  if (!factory) throw Error(Errc::Precondition, "run_batch needs a backend factory");
  config.validate();

  struct Slot {
    std::string session_id;
    bool skipped = false;
    std::optional<SessionRecord> record;
    std::string failure;  // set when the session could not even start
  };
  std::vector<Slot> slots(profiles.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (auto i = next.fetch_add(1); i < profiles.size(); i = next.fetch_add(1)) {
      auto& slot = slots[i];
      try {
        auto backends = factory(profiles[i]);
        auto seed = derive_session_seed(config.seed, profiles[i].id);
        slot.session_id = session_content_id(profiles[i].id, backends.therapist.model_id, seed);
        if (completed.contains(slot.session_id)) {
          slot.skipped = true;
          continue;
        }
        slot.record = SessionDriver(profiles[i], config, std::move(backends), templates, slot.session_id).run();
      } catch (const std::exception& e) {
        slot.failure = e.what();
      }
    }
  };
  auto threads = std::clamp<std::size_t>(parallelism, 1, profiles.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  BatchResult result;
  auto& m = result.manifest;
  m.config = config;
  Json run_key = Json::array();
  std::string hashed;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    auto& slot = slots[i];
    run_key.push_back(profiles[i].id);
    if (!slot.failure.empty()) {
      m.failures.push_back({profiles[i].id, slot.session_id, slot.failure});
      continue;
    }
    if (slot.record && slot.record->termination.kind == Termination::Kind::Error) {
      m.failures.push_back({profiles[i].id, slot.session_id, slot.record->termination.reason});
    } else {
      m.session_ids.push_back(slot.session_id);
      ++m.difficulty_counts[profiles[i].difficulty];
    }
    if (slot.record) {
      hashed += Json(*slot.record).dump();
      hashed += '\n';
      result.records.push_back(std::move(*slot.record));
    }
  }
  m.run_id = content_id("r-", Json{{"config", m.config}, {"profiles", run_key}}.dump());
  m.content_hash = sha256_hex(hashed);
  return result;
}

}  // namespace therasim
