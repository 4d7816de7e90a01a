#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "therasim/core/error.hpp"
#include "therasim/core/types.hpp"

namespace therasim {

inline constexpr double kGenerationTemperature = 0.7;
inline constexpr double kJudgeTemperature = 0.0;

enum class ChatRole { System, User, Assistant };
std::string_view to_string(ChatRole r);

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string content;

  static ChatMessage system(std::string text) { return {ChatRole::System, std::move(text)}; }
  static ChatMessage user(std::string text) { return {ChatRole::User, std::move(text)}; }
  static ChatMessage assistant(std::string text) { return {ChatRole::Assistant, std::move(text)}; }

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = kGenerationTemperature;
  std::optional<int> max_tokens;

  bool operator==(const ChatRequest&) const = default;
};

// Throws Error(InvalidArgument) on an empty message list, an empty
// user/assistant message, a negative temperature or a non-positive max_tokens.
void validate_request(const ChatRequest& request);

// Wire body for POST /v1/chat/completions.
Json request_to_json(const ChatRequest& request);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns the text of exactly one assistant message.
  virtual std::string complete(const ChatRequest& request) = 0;
};

std::string complete_chat(ChatBackend& backend, const ChatRequest& request);

struct ScriptEntry {
  std::string matcher;  // "*" matches anything; otherwise a substring of the last message
  std::string response;
};

// Loads a script from a JSON array of strings (wildcard entries) or
// {"match": ..., "response": ...} objects.
std::vector<ScriptEntry> script_from_json(const Json& j);

// Deterministic test double. Entries are consumed strictly in order; a
// request whose last message does not contain the next matcher fails with
// ScriptMismatch, and running past the end fails with Exhausted.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptEntry> script);
  static std::shared_ptr<ScriptedBackend> replay(std::vector<std::string> responses);

  std::string complete(const ChatRequest& request) override;

  std::size_t consumed() const;
  std::size_t remaining() const;
  std::vector<ChatRequest> requests() const;

 private:
  mutable std::mutex mutex_;
  std::vector<ScriptEntry> script_;
  std::size_t next_ = 0;
  std::vector<ChatRequest> requests_;
};

// Test double driven by a callable; useful for judges whose answer depends
// on the prompt.
class CallbackBackend final : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;
  explicit CallbackBackend(Handler handler) : handler_(std::move(handler)) {}

  std::string complete(const ChatRequest& request) override { return handler_(request); }

 private:
  Handler handler_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  // Delay before retry number `retry` (0-based); monotone non-decreasing.
  std::chrono::milliseconds delay_for(int retry) const;
};

struct HttpBackendConfig {
  std::string base_url;
  std::string api_key_env = "OPENAI_API_KEY";  // empty: send no credential
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
};

// OpenAI-compatible chat completions client. Transport failures, 429 and
// 5xx responses are retried with exponential backoff; 401/403 are fatal.
class HttpBackend final : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpBackend(HttpBackendConfig config, Sleeper sleeper = {});

  std::string complete(const ChatRequest& request) override;

  // Attempts made by the most recent complete() call.
  int last_attempts() const { return last_attempts_; }
  // Delays slept during the most recent complete() call.
  const std::vector<std::chrono::milliseconds>& last_delays() const { return last_delays_; }

 private:
  HttpBackendConfig config_;
  Sleeper sleeper_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  int last_attempts_ = 0;
  std::vector<std::chrono::milliseconds> last_delays_;
};

// A backend bound to a model id and sampling temperature, as one agent role
// sees it.
struct ModelEndpoint {
  std::shared_ptr<ChatBackend> backend;
  std::string model_id;
  double temperature = kGenerationTemperature;

  // Single-user-message request carrying this endpoint's parameters.
  ChatRequest request(std::string prompt) const;
  std::string ask(std::string prompt) const;
  explicit operator bool() const { return backend != nullptr; }
};

// Outcome of parsing one model reply.
template <typename T>
struct ParseOutcome {
  std::optional<T> value;
  std::string error;
  Errc failure = Errc::MalformedAfterRetries;

  static ParseOutcome ok(T v) { return ParseOutcome{std::move(v), {}, Errc::MalformedAfterRetries}; }
  static ParseOutcome fail(std::string why, Errc code = Errc::MalformedAfterRetries) {
    return ParseOutcome{std::nullopt, std::move(why), code};
  }
};

// Sends the request and parses the reply. On a parse failure the reply and a
// corrective user turn are appended and the request is re-sent, at most
// `max_reprompts` times. The final failure is thrown with the code the last
// parse reported.
template <typename T, typename Parser>
T complete_with_reprompts(ChatBackend& backend, ChatRequest request, Parser&& parse, int max_reprompts,
                          std::string_view reprompt_text) {
  std::string last_error;
  Errc failure = Errc::MalformedAfterRetries;
  for (int attempt = 0; attempt <= max_reprompts; ++attempt) {
    auto reply = complete_chat(backend, request);
    ParseOutcome<T> outcome = parse(reply);
    if (outcome.value) return std::move(*outcome.value);
    last_error = outcome.error;
    failure = outcome.failure;
    request.messages.push_back(ChatMessage::assistant(reply.empty() ? std::string("(empty)") : reply));
    request.messages.push_back(ChatMessage::user(std::string(reprompt_text) + "\nProblem: " + outcome.error));
  }
  throw Error(failure, "after " + std::to_string(max_reprompts) + " re-prompts: " + last_error);
}

}  // namespace therasim
