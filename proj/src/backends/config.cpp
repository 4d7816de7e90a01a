#include "therasim/backends/config.hpp"

#include <fstream>
#include <sstream>

#include "therasim/core/error.hpp"

namespace therasim {

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto j = Json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::InvalidArgument, "config is not a JSON object");
  return j;
}

std::optional<Json> config_value(const Json& config, std::string_view dotted_key) {
  if (!config.is_object()) return std::nullopt;
  const Json* node = &config;
  std::size_t start = 0;
  bool found = true;
  while (start <= dotted_key.size()) {
    auto dot = dotted_key.find('.', start);
    auto part = std::string(dotted_key.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (!node->is_object() || !node->contains(part)) {
      found = false;
      break;
    }
    node = &(*node)[part];
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (found && !node->is_null()) return std::optional<Json>(std::in_place, *node);
  if (auto it = config.find(std::string(dotted_key)); it != config.end() && !it->is_null()) return std::optional<Json>(std::in_place, *it);
  return std::nullopt;
}

BackendSettings backend_settings_from_config(const Json& config) {
  BackendSettings s;
  try {
    s.kind = config_or(config, "backend.kind", s.kind);
    s.base_url = config_or(config, "backend.base_url", s.base_url);
    s.api_key_env = config_or(config, "backend.api_key_env", s.api_key_env);
    s.model = config_or(config, "backend.model", s.model);
    s.patient_model = config_or(config, "backend.patient_model", s.patient_model);
    s.judge_model = config_or(config, "backend.judge_model", s.judge_model);
    s.temperature = config_or(config, "backend.temperature", s.temperature);
    s.judge_temperature = config_or(config, "backend.judge_temperature", s.judge_temperature);
    s.retries = config_or(config, "backend.retries", s.retries);
    s.initial_backoff_ms = config_or(config, "backend.initial_backoff_ms", s.initial_backoff_ms);
    s.script = config_or(config, "backend.script", s.script);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("backend config: ") + e.what());
  }
  if (s.kind != "http" && s.kind != "scripted") throw Error(Errc::InvalidArgument, "backend.kind must be http or scripted");
  if (s.temperature < 0 || s.judge_temperature < 0) throw Error(Errc::InvalidArgument, "temperatures must be >= 0");
  if (s.retries < 0) throw Error(Errc::InvalidArgument, "backend.retries must be >= 0");
  return s;
}

}  // namespace therasim
