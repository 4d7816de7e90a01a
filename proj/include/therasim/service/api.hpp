#pragma once

// HTTP+JSON API for human role-play sessions and preference annotation.
// Request handling is transport-free (ApiService::handle) so it can be tested
// without sockets; serve() binds it to cpp-httplib.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "therasim/datasets/datasets.hpp"
#include "therasim/service/store.hpp"
#include "therasim/simulation/batch.hpp"

namespace httplib {
class Server;
}

namespace therasim {

enum class LiveMode { HumanPatient, HumanTherapist };
std::string_view to_string(LiveMode m);
LiveMode live_mode_from_string(std::string_view s);

struct ApiConfig {
  std::filesystem::path storage_dir = "storage";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> token;  // static bearer token; none disables auth
  SessionConfig session;
  std::uint64_t annotation_seed = 0;
};

ApiConfig api_config_from_json(const Json& config);

struct ApiResponse {
  int status = 200;
  Json body;
};

class ApiService {
 public:
  // Loads profiles, candidate sets and live sessions from the storage dir.
  ApiService(ApiConfig config, BackendFactory factory, const TemplateRegistry& templates = TemplateRegistry::builtin());
  ~ApiService();

  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body,
                     std::string_view authorization = {}, const std::map<std::string, std::string>& query = {});

  // Blocks until stop(). Returns false when the port cannot be bound.
  bool serve();
  void stop();
  // Binds to an ephemeral port and returns it; call serve_bound() afterwards.
  int bind_any_port();
  bool serve_bound();

  JsonlStore& store() noexcept { return store_; }

 private:
  struct Live;

  ApiResponse create_session(const Json& body);
  ApiResponse post_utterance(const std::string& id, const Json& body);
  ApiResponse get_session(const std::string& id);
  ApiResponse close_session(const std::string& id, const Json& body);
  ApiResponse next_annotation(const std::string& annotator);
  ApiResponse post_annotation(const Json& body);

  std::shared_ptr<Live> find_live(const std::string& id);
  void persist(const Live& live);
  Json session_view(const Live& live) const;
  void install_routes();

  ApiConfig config_;
  BackendFactory factory_;
  const TemplateRegistry* templates_;
  JsonlStore store_;
  std::map<std::string, PatientProfile> profiles_;
  std::vector<CandidateSet> candidate_sets_;

  std::mutex mutex_;  // guards the maps below
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::map<std::string, std::set<std::string>> served_;  // annotator -> task ids
  std::size_t annotation_count_ = 0;

  std::unique_ptr<httplib::Server> server_;
};

}  // namespace therasim
