#include <httplib.h>

#include <random>

#include "therasim/backends/config.hpp"
#include "therasim/core/hash.hpp"
#include "therasim/core/json_text.hpp"
#include "therasim/service/api.hpp"

namespace therasim {
namespace {

ApiResponse error_response(int status, std::string message, Json extra = Json::object()) {
  extra["error"] = std::move(message);
  return ApiResponse{status, std::move(extra)};
}

int status_for(Errc code) {
  switch (code) {
    case Errc::NotFound: return 404;
    case Errc::Conflict: return 409;
    case Errc::InvalidArgument:
    case Errc::Precondition: return 400;
    case Errc::SchemaMismatch:
    case Errc::Corruption:
    case Errc::Io: return 500;
    default: return 502;
  }
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start < path.size()) {
    auto slash = path.find('/', start);
    auto part = path.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
    if (!part.empty()) parts.emplace_back(part);
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return parts;
}

Role human_role(LiveMode m) { return m == LiveMode::HumanPatient ? Role::Patient : Role::Therapist; }

}  // namespace

struct ApiService::Live {
  std::mutex mutex;
  std::string id;
  LiveMode mode = LiveMode::HumanPatient;
  bool environment = true;
  std::unique_ptr<SessionDriver> driver;
};

std::string_view to_string(LiveMode m) {
  return m == LiveMode::HumanPatient ? "human_patient" : "human_therapist";
}

LiveMode live_mode_from_string(std::string_view s) {
  if (s == "human_patient") return LiveMode::HumanPatient;
  if (s == "human_therapist" || s == "human_therapist_annotator") return LiveMode::HumanTherapist;
  throw Error(Errc::InvalidArgument, "mode must be \"human_patient\" or \"human_therapist\"");
}

ApiConfig api_config_from_json(const Json& config) {
  ApiConfig c;
  c.storage_dir = config_or<std::string>(config, "storage.dir", c.storage_dir.string());
  c.host = config_or<std::string>(config, "api.host", c.host);
  c.port = config_or<int>(config, "api.port", c.port);
  if (auto token = config_value(config, "api.token"); token && token->is_string() && !token->get<std::string>().empty()) {
    c.token = token->get<std::string>();
  }
  if (auto sim = config_value(config, "simulate")) c.session = sim->get<SessionConfig>();
  c.annotation_seed = config_or<std::uint64_t>(config, "api.annotation_seed", c.session.seed);
  if (c.port < 0 || c.port > 65535) throw Error(Errc::InvalidArgument, "api.port out of range");
  return c;
}

ApiService::ApiService(ApiConfig config, BackendFactory factory, const TemplateRegistry& templates)
    : config_(std::move(config)), factory_(std::move(factory)), templates_(&templates), store_(config_.storage_dir) {
  if (!factory_) throw Error(Errc::Precondition, "API needs a backend factory");
  config_.session.validate();
  for (auto& p : store_.load_as<PatientProfile>("profiles")) {
    auto id = p.id;
    profiles_[id] = std::move(p);
  }
  candidate_sets_ = store_.load_as<CandidateSet>("candidates");
  for (const auto& j : store_.load("annotation_served")) {
    served_[j.at("annotator").get<std::string>()].insert(j.at("task_id").get<std::string>());
  }
  annotation_count_ = store_.load("annotations").size();

  // Latest snapshot per live session wins.
  std::map<std::string, Json> latest;
  for (auto& j : store_.load("live_sessions")) {
    auto id = j.at("session_id").get<std::string>();
    latest[id] = std::move(j);
  }
  for (auto& [id, j] : latest) {
    auto record = j.at("record").get<SessionRecord>();
    auto profile = profiles_.find(record.profile_id);
    if (profile == profiles_.end()) throw Error(Errc::Corruption, "live session " + id + " names an unknown profile");
    auto live = std::make_shared<Live>();
    live->id = id;
    live->mode = live_mode_from_string(j.at("mode").get<std::string>());
    auto session_config = config_.session;
    session_config.environment_enabled = j.value("environment_enabled", session_config.environment_enabled);
    live->environment = session_config.environment_enabled;
    bool open = j.at("status").get<std::string>() == "open";
    live->driver = std::make_unique<SessionDriver>(SessionDriver::resume(
        profile->second, session_config, factory_(profile->second), std::move(record), open, *templates_));
    sessions_[id] = std::move(live);
  }
}

ApiService::~ApiService() { stop(); }

std::shared_ptr<ApiService::Live> ApiService::find_live(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

Json ApiService::session_view(const Live& live) const {
  const auto& r = live.driver->record();
  Json view{{"session_id", live.id},
            {"mode", to_string(live.mode)},
            {"status", live.driver->finished() ? "closed" : "open"},
            {"profile_id", r.profile_id},
            {"difficulty", to_string(r.difficulty)},
            {"utterance_count", r.utterances.size()},
            {"max_utterances", config_.session.max_utterances},
            {"utterances", r.utterances},
            {"termination", nullptr}};
  if (live.driver->finished()) view["termination"] = r.termination;
  return view;
}

void ApiService::persist(const Live& live) {
  store_.append("live_sessions", Json{{"session_id", live.id},
                                      {"mode", to_string(live.mode)},
                                      {"status", live.driver->finished() ? "closed" : "open"},
                                      {"environment_enabled", live.environment},
                                      {"record", live.driver->record()}});
}

ApiResponse ApiService::create_session(const Json& body) {
  if (!body.is_object() || !body.contains("profile_id") || !body["profile_id"].is_string()) {
    return error_response(400, "profile_id is required");
  }
  auto profile_id = body["profile_id"].get<std::string>();
  auto mode = live_mode_from_string(body.value("mode", std::string("human_patient")));
  auto profile = profiles_.find(profile_id);
  if (profile == profiles_.end()) return error_response(404, "unknown profile " + profile_id);

  auto session_config = config_.session;
  if (auto env = body.find("environment"); env != body.end() && env->is_boolean()) {
    session_config.environment_enabled = env->get<bool>();
  }
  auto live = std::make_shared<Live>();
  live->mode = mode;
  live->environment = session_config.environment_enabled;
  {
    std::lock_guard lock(mutex_);
    live->id = content_id("l-", profile_id + ":" + std::string(to_string(mode)) + ":" + std::to_string(sessions_.size()));
  }
  live->driver = std::make_unique<SessionDriver>(profile->second, session_config, factory_(profile->second),
                                                 *templates_, live->id);
  std::lock_guard session_lock(live->mutex);
  Json opening = nullptr;
  if (mode == LiveMode::HumanTherapist) {
    try {
      opening = live->driver->patient_step();
    } catch (const Error& e) {
      return error_response(502, std::string("patient agent failed: ") + e.what());
    }
  }
  {
    std::lock_guard lock(mutex_);
    sessions_[live->id] = live;
  }
  persist(*live);
  auto view = session_view(*live);
  view["opening"] = opening;
  return ApiResponse{201, view};
}

ApiResponse ApiService::post_utterance(const std::string& id, const Json& body) {
  auto live = find_live(id);
  if (!live) return error_response(404, "unknown session " + id);
  if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
    return error_response(400, "text is required");
  }
  std::lock_guard lock(live->mutex);
  auto& driver = *live->driver;
  if (driver.finished()) {
    return error_response(409, "session is closed",
                          Json{{"reason", to_string(driver.record().termination.kind)}, {"termination", driver.record().termination}});
  }
  if (driver.record().utterances.size() >= config_.session.max_utterances) {
    return error_response(409, "session is at the utterance cap", Json{{"reason", to_string(Termination::Kind::MaxTurns)}});
  }
  Json human;
  try {
    human = driver.human_step(human_role(live->mode), body["text"].get<std::string>());
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.what());
  }
  Json reply = nullptr;
  if (!driver.finished()) {
    try {
      reply = live->mode == LiveMode::HumanPatient ? driver.therapist_step() : driver.patient_step();
    } catch (const Error& e) {
      driver.fail(std::string(to_string(e.code())) + ": " + e.what());
      persist(*live);
      return error_response(502, std::string("engine turn failed: ") + e.what(), Json{{"session", session_view(*live)}});
    }
  }
  persist(*live);
  auto view = session_view(*live);
  Json out{{"utterance", human}, {"reply", reply}, {"status", view["status"]}, {"termination", view["termination"]},
           {"utterance_count", view["utterance_count"]}};
  return ApiResponse{200, out};
}

ApiResponse ApiService::get_session(const std::string& id) {
  auto live = find_live(id);
  if (!live) return error_response(404, "unknown session " + id);
  std::lock_guard lock(live->mutex);
  return ApiResponse{200, session_view(*live)};
}

ApiResponse ApiService::close_session(const std::string& id, const Json& body) {
  auto live = find_live(id);
  if (!live) return error_response(404, "unknown session " + id);
  std::lock_guard lock(live->mutex);
  if (live->driver->finished()) {
    return error_response(409, "session is already closed",
                          Json{{"reason", to_string(live->driver->record().termination.kind)}});
  }
  live->driver->close(body.is_object() ? body.value("reason", std::string()) : std::string());
  persist(*live);
  return ApiResponse{200, session_view(*live)};
}

ApiResponse ApiService::next_annotation(const std::string& annotator) {
  std::lock_guard lock(mutex_);
  auto& served = served_[annotator];
  std::vector<const CandidateSet*> open;
  for (const auto& set : candidate_sets_) {
    if (!served.contains(set.id)) open.push_back(&set);
  }
  if (open.empty()) return error_response(404, "no annotation tasks left for " + annotator);
  std::mt19937_64 rng(derive_session_seed(config_.annotation_seed, annotator + ":" + std::to_string(served.size())));
  const auto& set = *open[static_cast<std::size_t>(rng() % open.size())];
  auto a = static_cast<std::size_t>(rng() % set.candidates.size());
  auto b = static_cast<std::size_t>(rng() % (set.candidates.size() - 1));
  if (b >= a) ++b;
  served.insert(set.id);
  store_.append("annotation_served", Json{{"annotator", annotator}, {"task_id", set.id}});
  return ApiResponse{200, Json{{"task_id", set.id + ":" + std::to_string(a) + ":" + std::to_string(b)},
                               {"context", set.context},
                               {"response_a", set.candidates[a]},
                               {"response_b", set.candidates[b]}}};
}

ApiResponse ApiService::post_annotation(const Json& body) {
  if (!body.is_object()) return error_response(422, "annotation must be a JSON object");
  AnnotationRecord record;
  try {
    Json full = body;
    if (auto task = body.find("task_id"); task != body.end() && task->is_string()) {
      auto id = task->get<std::string>();
      auto c2 = id.rfind(':');
      auto c1 = c2 == std::string::npos || c2 == 0 ? std::string::npos : id.rfind(':', c2 - 1);
      if (c1 == std::string::npos) return error_response(422, "malformed task_id");
      auto set_id = id.substr(0, c1);
      auto it = std::find_if(candidate_sets_.begin(), candidate_sets_.end(),
                             [&](const CandidateSet& s) { return s.id == set_id; });
      if (it == candidate_sets_.end()) return error_response(404, "unknown task " + id);
      auto a = std::stoul(id.substr(c1 + 1, c2 - c1 - 1));
      auto b = std::stoul(id.substr(c2 + 1));
      if (a >= it->candidates.size() || b >= it->candidates.size() || a == b) {
        return error_response(422, "task_id indexes no candidate pair");
      }
      full["context"] = it->context;
      full["response_a"] = it->candidates[a];
      full["response_b"] = it->candidates[b];
    }
    if (full.contains("schema_version")) full.erase("schema_version");
    record = full.get<AnnotationRecord>();
  } catch (const Error& e) {
    return error_response(422, e.what());
  } catch (const std::exception& e) {
    return error_response(422, std::string("invalid annotation: ") + e.what());
  }
  std::vector<PreferencePair> pairs;
  {
    std::lock_guard lock(mutex_);
    record.id = content_id("a-", Json(record).dump() + ":" + std::to_string(annotation_count_++));
    pairs = pairs_from_annotation(record);
    store_.append("annotations", Json(record));
    for (const auto& p : pairs) store_.append("pairs", dpo_line(p));
  }
  Json listed = Json::array();
  for (const auto& p : pairs) listed.push_back(dpo_line(p));
  return ApiResponse{201, Json{{"annotation_id", record.id}, {"pair_count", pairs.size()}, {"pairs", listed}}};
}

ApiResponse ApiService::handle(std::string_view method, std::string_view path, std::string_view body,
                               std::string_view authorization, const std::map<std::string, std::string>& query) {
  auto parts = split_path(path);
  bool health = parts.size() == 1 && parts[0] == "health";
  if (config_.token && !health && authorization != "Bearer " + *config_.token) {
    return error_response(401, "missing or wrong bearer token");
  }
  Json json = Json::object();
  if (method == "POST" && !trim(body).empty()) {
    try {
      json = Json::parse(body);
    } catch (const Json::exception&) {
      bool annotation = parts.size() == 1 && parts[0] == "annotations";
      return error_response(annotation ? 422 : 400, "request body is not valid JSON");
    }
  }
  try {
    if (method == "GET" && health) {
      std::lock_guard lock(mutex_);
      return ApiResponse{200, Json{{"status", "ok"}, {"sessions", sessions_.size()}, {"profiles", profiles_.size()}}};
    }
    if (!parts.empty() && parts[0] == "sessions") {
      if (method == "POST" && parts.size() == 1) return create_session(json);
      if (method == "GET" && parts.size() == 2) return get_session(parts[1]);
      if (method == "POST" && parts.size() == 3 && parts[2] == "utterances") return post_utterance(parts[1], json);
      if (method == "POST" && parts.size() == 3 && parts[2] == "close") return close_session(parts[1], json);
    }
    if (!parts.empty() && parts[0] == "annotations") {
      if (method == "GET" && parts.size() == 2 && parts[1] == "next") {
        auto it = query.find("annotator");
        return next_annotation(it == query.end() || it->second.empty() ? std::string("default") : it->second);
      }
      if (method == "POST" && parts.size() == 1) return post_annotation(json);
    }
  } catch (const Error& e) {
    return error_response(status_for(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
  return error_response(404, "no route for " + std::string(method) + " " + std::string(path));
}

void ApiService::install_routes() {
  if (server_) return;
  server_ = std::make_unique<httplib::Server>();
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query[k] = v;
    auto out = handle(req.method, req.path, req.body, req.get_header_value("Authorization"), query);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  server_->Get(".*", forward);
  server_->Post(".*", forward);
}

bool ApiService::serve() {
  install_routes();
  return server_->listen(config_.host, config_.port);
}

int ApiService::bind_any_port() {
  install_routes();
  return server_->bind_to_any_port(config_.host);
}

bool ApiService::serve_bound() {
  install_routes();
  return server_->listen_after_bind();
}

void ApiService::stop() {
  if (server_) server_->stop();
}

}  // namespace therasim
