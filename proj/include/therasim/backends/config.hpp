#pragma once

// Engine configuration is a JSON document. Keys are documented in dotted
// form (backend.base_url) and may be written either nested
// ({"backend": {"base_url": ...}}) or flat ({"backend.base_url": ...}).

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "therasim/core/types.hpp"

namespace therasim {

Json load_config_file(const std::filesystem::path& path);

// Value at a dotted key, nested form first; nullopt when absent or null.
std::optional<Json> config_value(const Json& config, std::string_view dotted_key);

template <typename T>
T config_or(const Json& config, std::string_view dotted_key, T fallback) {
  auto v = config_value(config, dotted_key);
  return v ? v->get<T>() : fallback;
}

struct BackendSettings {
  std::string kind = "http";  // "http" or "scripted"
  std::string base_url = "https://api.openai.com";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model = "gpt-4o";               // therapist / generator
  std::string patient_model = "gpt-4o-mini";  // patient agent
  std::string judge_model = "gpt-4o";
  double temperature = 0.7;
  double judge_temperature = 0.0;
  int retries = 3;
  int initial_backoff_ms = 500;
  std::string script;  // scripted backend: path to role -> script JSON
};

BackendSettings backend_settings_from_config(const Json& config);

}  // namespace therasim
