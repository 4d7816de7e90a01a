#pragma once

// Append-only storage: one JSONL file per collection under a directory.
// Every stored line carries "schema_version" and a "checksum" (sha256 of the
// line without its checksum), so truncation and edits are detected on load.

#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "therasim/core/types.hpp"
#include "therasim/simulation/batch.hpp"

namespace therasim {

// Adds schema_version (when absent) and the checksum.
Json seal_record(Json record);
// Verifies and strips the checksum and checks the schema version.
// `where` names the source in error messages ("file:line").
Json unseal_record(const Json& line, std::string_view where);

class JsonlStore {
 public:
  explicit JsonlStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path path_of(std::string_view collection) const;

  void append(std::string_view collection, const Json& record);
  void append_all(std::string_view collection, const std::vector<Json>& records);
  // Rewrites the collection with exactly these records.
  void replace(std::string_view collection, const std::vector<Json>& records);
  // Throws Error(Corruption) naming file and line, Error(SchemaMismatch) for
  // newer records. A missing collection loads as empty.
  std::vector<Json> load(std::string_view collection) const;

  template <typename T>
  std::vector<T> load_as(std::string_view collection) const {
    std::vector<T> out;
    for (const auto& j : load(collection)) out.push_back(j.get<T>());
    return out;
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

// manifest.json is rewritten whole (it describes the latest run).
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace therasim
