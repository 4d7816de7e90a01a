#include "therasim/backends/backend.hpp"

#include <algorithm>
#include <cmath>

namespace therasim {

std::string_view to_string(ChatRole r) {
  switch (r) {
    case ChatRole::System: return "system";
    case ChatRole::User: return "user";
    case ChatRole::Assistant: return "assistant";
  }
  return "user";
}

void validate_request(const ChatRequest& request) {
  if (request.messages.empty()) throw Error(Errc::InvalidArgument, "chat request has no messages");
  for (const auto& m : request.messages) {
    if (m.role != ChatRole::System && m.content.empty()) {
      throw Error(Errc::InvalidArgument, std::string(to_string(m.role)) + " message is empty");
    }
  }
  if (!(request.temperature >= 0.0)) throw Error(Errc::InvalidArgument, "temperature must be >= 0");
  if (request.max_tokens && *request.max_tokens <= 0) {
    throw Error(Errc::InvalidArgument, "max_tokens must be positive");
  }
}

Json request_to_json(const ChatRequest& request) {
  Json messages = Json::array();
  for (const auto& m : request.messages) {
    messages.push_back(Json{{"role", to_string(m.role)}, {"content", m.content}});
  }
  Json body{{"model", request.model_id}, {"messages", std::move(messages)}, {"temperature", request.temperature}};
  if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
  return body;
}

std::string complete_chat(ChatBackend& backend, const ChatRequest& request) {
  validate_request(request);
  return backend.complete(request);
}

ChatRequest ModelEndpoint::request(std::string prompt) const {
  ChatRequest r;
  r.model_id = model_id;
  r.temperature = temperature;
  r.messages.push_back(ChatMessage::user(std::move(prompt)));
  return r;
}

std::string ModelEndpoint::ask(std::string prompt) const {
  if (!backend) throw Error(Errc::Precondition, "model endpoint has no backend");
  return complete_chat(*backend, request(std::move(prompt)));
}

std::vector<ScriptEntry> script_from_json(const Json& j) {
  if (!j.is_array()) throw Error(Errc::InvalidArgument, "script must be a JSON array");
  std::vector<ScriptEntry> out;
  for (const auto& item : j) {
    if (item.is_string()) {
      out.push_back({"*", item.get<std::string>()});
    } else if (item.is_object() && item.contains("response")) {
      out.push_back({item.value("match", std::string("*")), item.at("response").get<std::string>()});
    } else {
      throw Error(Errc::InvalidArgument, "script entries must be strings or {match, response} objects");
    }
  }
  return out;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> script) : script_(std::move(script)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::replay(std::vector<std::string> responses) {
  std::vector<ScriptEntry> script;
  script.reserve(responses.size());
  for (auto& r : responses) script.push_back({"*", std::move(r)});
  return std::make_shared<ScriptedBackend>(std::move(script));
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  if (next_ >= script_.size()) {
    throw Error(Errc::Exhausted, "script exhausted after " + std::to_string(script_.size()) + " responses");
  }
  const auto& entry = script_[next_];
  if (entry.matcher != "*") {
    const auto& last = request.messages.empty() ? std::string() : request.messages.back().content;
    if (last.find(entry.matcher) == std::string::npos) {
      throw Error(Errc::ScriptMismatch, "entry " + std::to_string(next_) + " expects '" + entry.matcher + "'");
    }
  }
  ++next_;
  return entry.response;
}

std::size_t ScriptedBackend::consumed() const {
  std::lock_guard lock(mutex_);
  return next_;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mutex_);
  return script_.size() - next_;
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::chrono::milliseconds RetryPolicy::delay_for(int retry) const {
  double base = static_cast<double>(initial_backoff.count()) * std::pow(std::max(multiplier, 1.0), retry);
  double capped = std::min(base, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(std::max(capped, 0.0)));
}

}  // namespace therasim
