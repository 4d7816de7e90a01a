#include "therasim/backends/templates.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "therasim/core/error.hpp"

namespace therasim {
namespace {

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ' '; }

// If a placeholder starts at body[pos] ('{'), returns its name.
std::optional<std::string_view> placeholder_at(std::string_view body, std::size_t pos) {
  if (pos + 1 >= body.size() || !name_start(body[pos + 1])) return std::nullopt;
  std::size_t end = pos + 1;
  while (end < body.size() && name_char(body[end])) ++end;
  if (end >= body.size() || body[end] != '}') return std::nullopt;
  auto name = body.substr(pos + 1, end - pos - 1);
  if (name.back() == ' ') return std::nullopt;
  return name;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> out;
  for (std::size_t pos = body.find('{'); pos != std::string::npos; pos = body.find('{', pos + 1)) {
    if (auto name = placeholder_at(body, pos)) {
      std::string n(*name);
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(std::move(n));
    }
  }
  return out;
}

std::string render_template(const PromptTemplate& tmpl, const Bindings& bindings) {
  std::string_view body = tmpl.body;
  std::string out;
  out.reserve(body.size());
  std::size_t copied = 0;
  for (std::size_t pos = body.find('{'); pos != std::string_view::npos; pos = body.find('{', pos + 1)) {
    auto name = placeholder_at(body, pos);
    if (!name) continue;
    auto it = bindings.find(*name);
    if (it == bindings.end()) {
      throw Error(Errc::UnboundPlaceholder, std::string(*name) + " (template " + tmpl.id + ")");
    }
    out.append(body.substr(copied, pos - copied));
    out.append(it->second);
    copied = pos + name->size() + 2;
    pos = copied - 1;
  }
  out.append(body.substr(copied));
  return out;
}

TemplateRegistry::TemplateRegistry(const std::filesystem::path& dir) {
  auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"), nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("templates")) {
    throw Error(Errc::Io, "malformed template manifest in " + dir.string());
  }
  for (const auto& [id, entry] : manifest.at("templates").items()) {
    PromptTemplate t;
    t.id = id;
    t.version = entry.at("version").get<std::string>();
    t.body = read_file(dir / entry.at("file").get<std::string>());
    if (!t.body.empty() && t.body.back() == '\n') t.body.pop_back();
    templates_.emplace(id, std::move(t));
  }
}

std::filesystem::path TemplateRegistry::default_dir() {
  if (const char* env = std::getenv("THERASIM_ASSET_DIR"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env) / "prompts";
  }
  return std::filesystem::path(THERASIM_DEFAULT_ASSET_DIR) / "prompts";
}

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry registry(default_dir());
  return registry;
}

const PromptTemplate& TemplateRegistry::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw Error(Errc::UnknownTemplate, std::string(id));
  return it->second;
}

bool TemplateRegistry::contains(std::string_view id) const { return templates_.find(id) != templates_.end(); }

std::string TemplateRegistry::render(std::string_view id, const Bindings& bindings) const {
  return render_template(get(id), bindings);
}

std::map<std::string, std::string> TemplateRegistry::versions() const {
  std::map<std::string, std::string> out;
  for (const auto& [id, t] : templates_) out.emplace(id, t.version);
  return out;
}

}  // namespace therasim
