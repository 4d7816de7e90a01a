#pragma once

// Prompt templates are shipped as versioned asset files and loaded by id.
// Placeholders are written {name}; names may contain letters, digits,
// underscores and inner spaces ("{difficulty description}"). Any other brace
// text, such as literal JSON in a prompt, is left untouched.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace therasim {

using Bindings = std::map<std::string, std::string, std::less<>>;

struct PromptTemplate {
  std::string id;
  std::string version;
  std::string body;

  // Distinct placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;
};

// Byte-exact single-pass substitution. Throws Error(UnboundPlaceholder) naming
// the first placeholder with no binding. Bound values are not re-scanned.
std::string render_template(const PromptTemplate& tmpl, const Bindings& bindings);

class TemplateRegistry {
 public:
  // Reads <dir>/manifest.json: {"templates": {"<id>": {"file": ..., "version": ...}}}.
  explicit TemplateRegistry(const std::filesystem::path& dir);

  // Asset directory from $THERASIM_ASSET_DIR, else the build-time default.
  static std::filesystem::path default_dir();
  // Process-wide registry over default_dir(), loaded on first use.
  static const TemplateRegistry& builtin();

  const PromptTemplate& get(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::string render(std::string_view id, const Bindings& bindings) const;
  // id -> version for every loaded template.
  std::map<std::string, std::string> versions() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

}  // namespace therasim
