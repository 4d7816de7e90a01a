#include "therasim/datasets/footer.hpp"

#include <algorithm>
#include <cctype>

#include "therasim/core/error.hpp"
#include "therasim/core/json_text.hpp"

namespace therasim {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

// Length of the footer marker at the start of the (left-trimmed) line, or 0.
std::size_t marker_length(std::string_view line) {
  auto l = lower(line.substr(0, 16));
  for (std::string_view marker : {"**strategies:**", "**strategies**:"}) {
    if (l.starts_with(marker)) return marker.size();
  }
  return 0;
}

std::vector<std::string> split_items(std::string_view body) {
  std::vector<std::string> items;
  std::string current;
  int depth = 0;
  for (char c : body) {
    if (c == '(') ++depth;
    if (c == ')' && depth > 0) --depth;
    if ((c == ',' || c == ';') && depth == 0) {
      items.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  items.push_back(std::move(current));
  return items;
}

bool is_etc(std::string_view item) {
  auto l = lower(item);
  return l == "etc" || l == "etc." || l == "..." || l == "…" || l == "and so on" || l == "and more";
}

// Trims whitespace, markdown emphasis, trailing periods and a leading "and".
std::string clean_item(std::string_view raw) {
  auto s = trim(raw);
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    // "**SFBT**." : a sentence period outside the emphasis.
    if (s.size() > 2 && s.back() == '.' && std::string_view("*_`").find(s[s.size() - 2]) != std::string_view::npos) {
      s.remove_suffix(1);
      changed = true;
    }
    for (std::string_view wrap : {"**", "*", "`", "_"}) {
      if (s.starts_with(wrap)) {
        s.remove_prefix(wrap.size());
        changed = true;
      }
      if (s.ends_with(wrap)) {
        s.remove_suffix(wrap.size());
        changed = true;
      }
    }
    s = trim(s);
  }
  if (is_etc(s)) return std::string(s);
  auto l = lower(s);
  if (l.starts_with("and ")) s.remove_prefix(4);
  if (l.starts_with("& ")) s.remove_prefix(2);
  s = trim(s);
  std::string out(s);
  if (!is_etc(out)) {
    while (!out.empty() && out.back() == '.') out.pop_back();
  }
  return std::string(trim(out));
}

}  // namespace

std::optional<FooterParse> find_strategy_footer(std::string_view text) {
  auto lines = split_lines(text);
  for (std::size_t i = lines.size(); i-- > 0;) {
    auto line = trim(lines[i]);
    auto marker = marker_length(line);
    if (marker == 0) continue;

    FooterParse parse;
    parse.line_index = i;
    for (const auto& raw : split_items(line.substr(marker))) {
      auto item = clean_item(raw);
      if (item.empty()) continue;
      if (is_etc(item)) {
        parse.warnings.push_back("dropped '" + item + "'");
        continue;
      }
      auto l = lower(item);
      if (l.ends_with(" etc")) {
        parse.warnings.push_back("dropped trailing 'etc.' from '" + item + "'");
        item = std::string(trim(std::string_view(item).substr(0, item.size() - 4)));
      }
      auto ref = try_canonicalize_strategy(item);
      if (!ref) {
        parse.warnings.push_back("unknown strategy '" + item + "'");
        continue;
      }
      if (std::find(parse.strategies.begin(), parse.strategies.end(), *ref) != parse.strategies.end()) {
        parse.warnings.push_back("repeated strategy '" + item + "'");
        continue;
      }
      if (!ref->is_framework()) parse.lists_actionable = true;
      parse.strategies.push_back(*ref);
    }
    return parse;
  }
  return std::nullopt;
}

FooterParse parse_strategy_footer(std::string_view text) {
  if (auto parse = find_strategy_footer(text)) return std::move(*parse);
  throw Error(Errc::NoFooter, "no line begins with **Strategies:**");
}

std::string strip_strategy_footer(std::string_view text) {
  auto footer = find_strategy_footer(text);
  if (!footer) return std::string(trim(text));
  auto lines = split_lines(text);
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i == footer->line_index) continue;
    out.append(lines[i]);
    out.push_back('\n');
  }
  return std::string(trim(out));
}

}  // namespace therasim
