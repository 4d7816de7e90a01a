#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "therasim/core/json_text.hpp"
#include "therasim/datasets/datasets.hpp"
#include "therasim/evaluation/analytics.hpp"
#include "therasim/evaluation/report.hpp"
#include "therasim/profiles/profiles.hpp"
#include "therasim/service/api.hpp"
#include "therasim/service/cli.hpp"
#include "therasim/service/store.hpp"

namespace therasim {
namespace {

namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string script;
  std::string out = "out";
};

struct Context {
  Json config = Json::object();
  BackendSettings backend;
  SessionConfig session;
  fs::path out;
};

Context make_context(const Globals& g) {
  Context c;
  if (!g.config_path.empty()) c.config = load_config_file(g.config_path);
  c.backend = backend_settings_from_config(c.config);
  if (!g.backend.empty()) c.backend.kind = g.backend;
  if (!g.script.empty()) c.backend.script = g.script;
  if (c.backend.kind != "http" && c.backend.kind != "scripted") {
    throw Error(Errc::InvalidArgument, "unknown backend '" + c.backend.kind + "' (expected http or scripted)");
  }
  if (auto sim = config_value(c.config, "simulate")) c.session = sim->get<SessionConfig>();
  if (g.seed) c.session.seed = *g.seed;
  c.out = g.out;
  fs::create_directories(c.out);
  return c;
}

std::vector<RawPost> read_posts(const fs::path& path) {
  std::vector<RawPost> posts;
  for (const auto& j : read_jsonl(path)) posts.push_back(j.get<RawPost>());
  return posts;
}

std::vector<Json> to_lines(const auto& items) {
  std::vector<Json> out;
  for (const auto& i : items) out.push_back(Json(i));
  return out;
}

// ---- subcommands ----

int cmd_profiles(const Context& ctx, const std::string& in, std::size_t per_level, std::ostream& out) {
  BackendProvider provider(ctx.backend);
  auto extractor = provider.endpoint("generator");
  auto posts = read_posts(in);
  if (posts.empty()) throw Error(Errc::EmptyInput, "no posts in " + in);

  std::map<std::string, std::vector<const RawPost*>> by_author;
  CorpusStatsAccumulator stats;
  for (const auto& p : posts) {
    by_author[p.author_id].push_back(&p);
    stats.add_post(p.author_id, p.is_main);
  }
  std::vector<PatientProfile> profiles;
  std::size_t partial = 0, skipped = 0;
  for (const auto& [author, author_posts] : by_author) {
    std::vector<ExtractionRecord> records;
    bool any_main = std::any_of(author_posts.begin(), author_posts.end(), [](const RawPost* p) { return p->is_main; });
    for (const auto* p : author_posts) {
      if (any_main && !p->is_main) continue;
      auto redacted = redact_pii(p->text, extractor);
      if (redacted.partial) ++partial;
      RawPost clean{author, redact_patterns(redacted.text), p->is_main};
      records.push_back(extract_fields(clean, extractor));
    }
    try {
      profiles.push_back(synthesize_profile(records, assign_difficulty(profiles.size(), per_level), extractor));
    } catch (const Error& e) {
      if (e.code() != Errc::EmptyInput) throw;
      ++skipped;
    }
  }
  JsonlStore store(ctx.out);
  store.replace("profiles", to_lines(profiles));
  auto result = stats.result();
  std::ofstream(ctx.out / "corpus_stats.json") << stats_to_json(result).dump(2) << '\n';
  out << render_stats_table(result);
  out << "profiles: " << profiles.size() << " written, " << skipped << " authors without usable fields, " << partial
      << " posts redacted by patterns only\n";
  return 0;
}

int cmd_simulate(const Context& ctx, const std::string& in, std::size_t parallelism, bool resume, std::ostream& out) {
  JsonlStore source(in.empty() ? ctx.out : fs::path(in));
  auto profiles = source.load_as<PatientProfile>("profiles");
  if (profiles.empty()) throw Error(Errc::EmptyInput, "no profiles in " + source.dir().string());
  BackendProvider provider(ctx.backend);
  JsonlStore store(ctx.out);
  std::set<std::string> completed;
  auto manifest_path = ctx.out / "manifest.json";
  if (resume && fs::exists(manifest_path)) {
    auto previous = read_manifest(manifest_path);
    completed.insert(previous.session_ids.begin(), previous.session_ids.end());
  }
  auto result = run_batch(profiles, ctx.session, provider.factory(), parallelism, completed);
  if (resume) {
    store.append_all("sessions", to_lines(result.records));
  } else {
    store.replace("sessions", to_lines(result.records));
  }
  write_manifest(manifest_path, result.manifest);
  const auto& m = result.manifest;
  out << "run " << m.run_id << ": " << m.session_ids.size() << " sessions";
  for (auto d : kAllDifficulties) {
    auto it = m.difficulty_counts.find(d);
    out << ", " << to_string(d) << " " << (it == m.difficulty_counts.end() ? 0 : it->second);
  }
  out << ", " << m.failures.size() << " failures\n";
  return m.failures.empty() ? 0 : 1;
}

int cmd_sft(const Context& ctx, const std::string& in, std::ostream& out) {
  JsonlStore source(in.empty() ? ctx.out : fs::path(in));
  auto profiles = source.load_as<PatientProfile>("profiles");
  BackendProvider provider(ctx.backend);
  auto generator = provider.endpoint("generator");
  StrategyCounts usage;
  std::vector<SftDialogue> accepted;
  std::vector<SftRejection> rejected;
  for (const auto& p : profiles) {
    auto outcome = build_sft_dialogue(p, usage, generator);
    if (auto* d = std::get_if<SftDialogue>(&outcome)) {
      for (const auto& s : d->footer_strategies) ++usage[s];
      accepted.push_back(std::move(*d));
    } else {
      rejected.push_back(std::get<SftRejection>(outcome));
    }
  }
  auto report = export_sft(accepted, ctx.out / "sft.jsonl");
  export_rejects(rejected, ctx.out / "rejects.jsonl");
  out << "sft: " << report.line_count << " dialogues (sha256 " << report.sha256 << "), " << rejected.size()
      << " rejected\n";
  return 0;
}

// Prefixes ending at a patient utterance, evenly spread over the session.
std::vector<std::vector<Utterance>> pick_states(const SessionRecord& s, std::size_t per_session) {
  std::vector<std::size_t> ends;
  for (const auto& u : s.utterances) {
    if (u.role == Role::Patient) ends.push_back(u.index);
  }
  std::vector<std::vector<Utterance>> states;
  if (ends.empty() || per_session == 0) return states;
  auto n = std::min(per_session, ends.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto end = ends[(i * ends.size()) / n];
    states.emplace_back(s.utterances.begin(), s.utterances.begin() + static_cast<std::ptrdiff_t>(end + 1));
  }
  return states;
}

int cmd_dpo(const Context& ctx, const std::string& in, std::size_t k, const std::string& policy_name,
            std::size_t states, const std::string& annotations, std::ostream& out) {
  PairPolicy policy;
  if (policy_name == "top-bottom") {
    policy = PairPolicy::TopVsBottom;
  } else if (policy_name == "top-rest") {
    policy = PairPolicy::TopVsRest;
  } else {
    throw Error(Errc::InvalidArgument, "policy must be top-bottom or top-rest");
  }
  JsonlStore source(in.empty() ? ctx.out : fs::path(in));
  auto sessions = source.load_as<SessionRecord>("sessions");
  BackendProvider provider(ctx.backend);
  auto therapist = provider.endpoint("therapist");
  auto judge = provider.endpoint("judge");

  std::vector<CandidateSet> sets;
  std::vector<Json> rankings;
  std::vector<PreferencePair> pairs;
  std::size_t failed = 0;
  for (const auto& s : sessions) {
    for (auto& context : pick_states(s, states)) {
      try {
        auto set = generate_candidates(context, k, therapist);
        auto ranking = rank_candidates(set.context, set.candidates, judge);
        auto derived = pairs_from_ranking(set, ranking, policy);
        pairs.insert(pairs.end(), derived.begin(), derived.end());
        rankings.push_back(Json{{"candidate_set", set.id}, {"ranking", ranking}});
        sets.push_back(std::move(set));
      } catch (const Error& e) {
        ++failed;
        std::cerr << "state skipped (" << s.id << "): " << e.what() << '\n';
      }
    }
  }
  std::size_t human = 0;
  if (!annotations.empty()) {
    std::size_t line = 0;
    for (const auto& j : read_jsonl(annotations)) {
      ++line;
      // Lines from the API store are sealed; verify them before use.
      auto record = j.contains("checksum") ? unseal_record(j, annotations + ":" + std::to_string(line)) : j;
      auto derived = pairs_from_annotation(record.get<AnnotationRecord>());
      human += derived.size();
      pairs.insert(pairs.end(), derived.begin(), derived.end());
    }
  }
  JsonlStore store(ctx.out);
  store.replace("candidates", to_lines(sets));
  store.replace("rankings", rankings);
  auto report = export_dpo(pairs, ctx.out / "dpo.jsonl");
  out << "dpo: " << report.line_count << " pairs (" << human << " from annotations, sha256 " << report.sha256 << "), "
      << sets.size() << " ranked states, " << failed << " failed states\n";
  return 0;
}

int cmd_score(const Context& ctx, const std::string& in, std::ostream& out) {
  JsonlStore source(in.empty() ? ctx.out : fs::path(in));
  auto sessions = source.load_as<SessionRecord>("sessions");
  BackendProvider provider(ctx.backend);
  auto judge = provider.endpoint("judge");
  std::vector<ScoredSession> scored;
  std::size_t failures = 0;
  for (const auto& s : sessions) {
    std::optional<MotivationConfidence> state;
    std::optional<ScoreCard> card;
    try {
      if (!s.utterances.empty()) state = score_state(s.utterances, s.utterances.size() - 1, judge);
      if (s.utterances.size() >= 2) card = score_dimensions(s, judge);
    } catch (const Error& e) {
      ++failures;
      std::cerr << "scoring " << s.id << " failed: " << e.what() << '\n';
    }
    scored.push_back(scored_session(s, state, card));
  }
  JsonlStore(ctx.out).replace("scores", to_lines(scored));
  out << "score: " << scored.size() << " sessions, " << failures << " judge failures\n";
  return failures == 0 ? 0 : 1;
}

int cmd_compare(const Context& ctx, const std::string& a_dir, const std::string& b_dir, bool single_order,
                std::ostream& out) {
  auto a = JsonlStore(a_dir).load_as<SessionRecord>("sessions");
  auto b = JsonlStore(b_dir).load_as<SessionRecord>("sessions");
  std::map<std::string, const SessionRecord*> b_by_profile;
  for (const auto& s : b) b_by_profile.emplace(s.profile_id, &s);
  BackendProvider provider(ctx.backend);
  auto judge = provider.endpoint("judge");
  std::vector<WinRecord> records;
  std::map<std::string, std::string> model_of;
  for (const auto& s : a) {
    auto it = b_by_profile.find(s.profile_id);
    if (it == b_by_profile.end()) continue;
    records.push_back(compare_pairwise(s, *it->second, judge, !single_order));
    model_of[s.id] = s.model;
    model_of[it->second->id] = it->second->model;
  }
  if (records.empty()) throw Error(Errc::EmptyInput, "no sessions share a profile across the two runs");
  JsonlStore store(ctx.out);
  store.replace("wins", to_lines(records));
  Json models = Json::object();
  for (const auto& [id, m] : model_of) models[id] = m;
  store.replace("win_models", {Json{{"models", models}}});
  std::set<std::string> names;
  for (const auto& [id, m] : model_of) names.insert(m);
  for (const auto& name : names) {
    auto w = win_rate(records, model_of, name);
    out << name << ": " << w.wins << " wins, " << w.losses << " losses, " << w.ties << " ties";
    if (w.fraction) out << " (" << *w.fraction * 100.0 << "%)";
    out << '\n';
  }
  return 0;
}

int cmd_report(const Context& ctx, const std::string& in, const std::string& format_name, std::ostream& out) {
  auto format = report_format_from_string(format_name);
  JsonlStore source(in.empty() ? ctx.out : fs::path(in));
  auto scored = source.load_as<ScoredSession>("scores");
  auto report = aggregate_run(scored);
  std::vector<WinRate> wins;
  auto records = source.load_as<WinRecord>("wins");
  auto model_rows = source.load("win_models");
  if (!records.empty() && !model_rows.empty()) {
    std::map<std::string, std::string> model_of;
    for (const auto& [id, m] : model_rows.back().at("models").items()) model_of[id] = m.get<std::string>();
    std::set<std::string> names;
    for (const auto& [id, m] : model_of) names.insert(m);
    for (const auto& name : names) wins.push_back(win_rate(records, model_of, name));
  }
  auto text = render_report(report, format, wins);
  std::string ext = format == ReportFormat::Csv ? "csv" : format == ReportFormat::Json ? "json" : "txt";
  std::ofstream(ctx.out / ("report." + ext), std::ios::binary) << text;
  out << text;
  return 0;
}

int cmd_serve(const Context& ctx, std::ostream& out) {
  auto api = api_config_from_json(ctx.config);
  if (!config_value(ctx.config, "storage.dir")) api.storage_dir = ctx.out;
  api.session = ctx.session;
  BackendProvider provider(ctx.backend);
  ApiService service(api, provider.factory());
  out << "serving on " << api.host << ":" << api.port << " (storage " << api.storage_dir.string() << ")" << std::endl;
  return service.serve() ? 0 : 1;
}

}  // namespace

BackendProvider::BackendProvider(BackendSettings settings) : settings_(std::move(settings)) {
  if (settings_.kind == "scripted") {
    if (settings_.script.empty()) throw Error(Errc::InvalidArgument, "scripted backend needs a script file");
    scripts_ = load_config_file(settings_.script);
    if (!scripts_.is_object()) throw Error(Errc::InvalidArgument, "script file must map roles to scripts");
  }
}

ModelEndpoint BackendProvider::endpoint(std::string_view role) const {
  ModelEndpoint e;
  bool judging = role == "judge" || role == "attribution";
  e.model_id = role == "patient" ? settings_.patient_model : judging ? settings_.judge_model : settings_.model;
  e.temperature = judging ? settings_.judge_temperature : settings_.temperature;
  if (settings_.kind == "scripted") {
    auto it = scripts_.find(std::string(role));
    if (it != scripts_.end()) e.backend = std::make_shared<ScriptedBackend>(script_from_json(*it));
    return e;
  }
  HttpBackendConfig http;
  http.base_url = settings_.base_url;
  http.api_key_env = settings_.api_key_env;
  http.retry.max_retries = settings_.retries;
  http.retry.initial_backoff = std::chrono::milliseconds(settings_.initial_backoff_ms);
  e.backend = std::make_shared<HttpBackend>(http);
  return e;
}

SessionBackends BackendProvider::session_backends() const {
  return SessionBackends{endpoint("patient"), endpoint("therapist"), endpoint("judge"), endpoint("attribution")};
}

BackendFactory BackendProvider::factory() const {
  auto self = *this;
  return [self](const PatientProfile&) { return self.session_backends(); };
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Therapeutic-dialogue simulation, dataset and evaluation engine", "therasim"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Run seed (overrides simulate.seed)");
  app.add_option("--backend", g.backend, "Backend kind: http or scripted");
  app.add_option("--script", g.script, "Role scripts for the scripted backend");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  std::string in, a_dir, b_dir, format = "table-text", policy = "top-bottom", annotations;
  std::size_t per_level = 0, parallelism = 1, k = kDefaultCandidates, states = 2;
  bool resume = false, single_order = false;

  auto* profiles = app.add_subcommand("profiles", "Build patient profiles from posts");
  profiles->add_option("--in", in, "Posts JSONL (author_id, text, is_main)")->required();
  profiles->add_option("--per-level", per_level, "Profiles per difficulty tier (0 cycles tiers)");
  auto* simulate = app.add_subcommand("simulate", "Run a batch of simulated sessions");
  simulate->add_option("--in", in, "Store directory holding profiles (default --out)");
  simulate->add_option("--parallelism", parallelism, "Concurrent sessions")->check(CLI::PositiveNumber);
  simulate->add_flag("--resume", resume, "Skip sessions listed in the existing manifest");
  auto* sft = app.add_subcommand("sft", "Generate the SFT dialogue dataset");
  sft->add_option("--in", in, "Store directory holding profiles (default --out)");
  auto* dpo = app.add_subcommand("dpo", "Build preference pairs from rankings and annotations");
  dpo->add_option("--in", in, "Store directory holding sessions (default --out)");
  dpo->add_option("--k", k, "Candidates per state")->check(CLI::Range(2, 16));
  dpo->add_option("--policy", policy, "top-bottom or top-rest");
  dpo->add_option("--states", states, "States sampled per session");
  dpo->add_option("--annotations", annotations, "Annotation records JSONL");
  auto* score = app.add_subcommand("score", "Judge-score sessions");
  score->add_option("--in", in, "Store directory holding sessions (default --out)");
  auto* compare = app.add_subcommand("compare", "Pairwise-compare two runs");
  compare->add_option("--a", a_dir, "Store directory of run A")->required();
  compare->add_option("--b", b_dir, "Store directory of run B")->required();
  compare->add_flag("--single-order", single_order, "Disable position debiasing");
  auto* report = app.add_subcommand("report", "Render the aggregate report");
  report->add_option("--in", in, "Store directory holding scores (default --out)");
  report->add_option("--format", format, "table-text, csv or json");
  auto* serve = app.add_subcommand("serve", "Start the HTTP API");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    auto ctx = make_context(g);
    if (*profiles) return cmd_profiles(ctx, in, per_level, out);
    if (*simulate) return cmd_simulate(ctx, in, parallelism, resume, out);
    if (*sft) return cmd_sft(ctx, in, out);
    if (*dpo) return cmd_dpo(ctx, in, k, policy, states, annotations, out);
    if (*score) return cmd_score(ctx, in, out);
    if (*compare) return cmd_compare(ctx, a_dir, b_dir, single_order, out);
    if (*report) return cmd_report(ctx, in, format, out);
    if (*serve) return cmd_serve(ctx, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace therasim
