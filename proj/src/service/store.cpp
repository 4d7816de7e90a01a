#include <fstream>

#include "therasim/core/hash.hpp"
#include "therasim/service/store.hpp"

namespace therasim {

Json seal_record(Json record) {
  if (!record.is_object()) throw Error(Errc::InvalidArgument, "only JSON objects can be stored");
  record.erase("checksum");
  if (!record.contains("schema_version")) record["schema_version"] = kSchemaVersion;
  auto digest = sha256_hex(record.dump());
  record["checksum"] = digest;
  return record;
}

Json unseal_record(const Json& line, std::string_view where) {
  if (!line.is_object()) throw Error(Errc::Corruption, std::string(where) + ": record is not an object");
  auto it = line.find("checksum");
  if (it == line.end() || !it->is_string()) throw Error(Errc::Corruption, std::string(where) + ": missing checksum");
  Json record = line;
  record.erase("checksum");
  if (sha256_hex(record.dump()) != it->get<std::string>()) {
    throw Error(Errc::Corruption, std::string(where) + ": checksum mismatch");
  }
  try {
    check_schema_version(record);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(where) + ": " + e.what());
  }
  return record;
}

JsonlStore::JsonlStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(Errc::Io, "cannot create storage directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path JsonlStore::path_of(std::string_view collection) const {
  if (collection.empty() || collection.find_first_of("/\\.") != std::string_view::npos) {
    throw Error(Errc::InvalidArgument, "bad collection name '" + std::string(collection) + "'");
  }
  return dir_ / (std::string(collection) + ".jsonl");
}

void JsonlStore::append(std::string_view collection, const Json& record) { append_all(collection, {record}); }

void JsonlStore::append_all(std::string_view collection, const std::vector<Json>& records) {
  std::string body;
  for (const auto& r : records) {
    body += seal_record(r).dump();
    body += '\n';
  }
  std::lock_guard lock(mutex_);
  auto path = path_of(collection);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string());
  out << body;
  out.flush();
  if (!out) throw Error(Errc::Io, "failed appending to " + path.string());
}

void JsonlStore::replace(std::string_view collection, const std::vector<Json>& records) {
  std::string body;
  for (const auto& r : records) {
    body += seal_record(r).dump();
    body += '\n';
  }
  std::lock_guard lock(mutex_);
  auto path = path_of(collection);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot open " + tmp.string());
    out << body;
    if (!out) throw Error(Errc::Io, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, "cannot replace " + path.string() + ": " + ec.message());
}

std::vector<Json> JsonlStore::load(std::string_view collection) const {
  std::lock_guard lock(mutex_);
  auto path = path_of(collection);
  std::vector<Json> out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto where = path.filename().string() + ":" + std::to_string(n);
    Json parsed;
    try {
      parsed = Json::parse(line);
    } catch (const Json::exception&) {
      throw Error(Errc::Corruption, where + ": line is not valid JSON (truncated?)");
    }
    out.push_back(unseal_record(parsed, where));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << Json(manifest).dump(2) << '\n';
  if (!out) throw Error(Errc::Io, "failed writing " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  try {
    return Json::parse(in).get<RunManifest>();
  } catch (const Json::exception& e) {
    throw Error(Errc::Corruption, path.string() + ": " + e.what());
  }
}

}  // namespace therasim
