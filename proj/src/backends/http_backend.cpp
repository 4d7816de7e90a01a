#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "therasim/backends/backend.hpp"

namespace therasim {
namespace {

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  const auto& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::InvalidArgument, "base_url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    path_prefix_ = url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
  if (config_.retry.max_retries < 0) throw Error(Errc::InvalidArgument, "retry limit must be >= 0");
}

std::string HttpBackend::complete(const ChatRequest& request) {
  validate_request(request);
  last_attempts_ = 0;
  last_delays_.clear();

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(Errc::BadCredential, "environment variable " + config_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  const auto path = path_prefix_ + "/v1/chat/completions";
  const auto body = request_to_json(request).dump();

  std::string last_failure;
  for (int attempt = 0; attempt <= config_.retry.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = config_.retry.delay_for(attempt - 1);
      last_delays_.push_back(delay);
      sleeper_(delay);
    }
    ++last_attempts_;
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw Error(Errc::BadCredential, "endpoint rejected credential (HTTP " + std::to_string(res->status) + ")");
    }
    if (retryable_status(res->status)) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(Errc::Transport, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    auto parsed = Json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw Error(Errc::BadResponse, "response body is not JSON");
    try {
      const auto& content = parsed.at("choices").at(0).at("message").at("content");
      if (!content.is_string()) throw Error(Errc::BadResponse, "message content is not text");
      return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::BadResponse, std::string("unexpected response shape: ") + e.what());
    }
  }
  throw Error(Errc::Transport, last_failure + " after " + std::to_string(last_attempts_) + " attempts");
}

}  // namespace therasim
