#include <algorithm>
#include <cctype>
#include <regex>

#include "therasim/core/json_text.hpp"
#include "therasim/profiles/profiles.hpp"

namespace therasim {
namespace {

// Group 1 email, 2 URL, 3 handle, 4 phone-like run. Order matters: an email
// must win over the handle that starts at its '@'.
const std::regex& pattern() {
  static const std::regex re(
      R"(([A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}))"
      R"(|((?:https?://|www\.)[^\s<>"]*[^\s<>".,;:!?)\]]))"
      R"(|(\bu/[A-Za-z0-9_-]{3,}|\B@[A-Za-z0-9_]{2,}))"
      R"(|(\+?\(?\d[\d \t().-]{5,}\d))",
      std::regex::ECMAScript | std::regex::optimize);
  return re;
}

std::size_t digit_count(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }));
}

std::string_view token_for_type(std::string type) {
  std::transform(type.begin(), type.end(), type.begin(), [](unsigned char c) { return std::toupper(c); });
  if (type == "LOCATION" || type == "ADDRESS" || type == "PLACE") return kLocationToken;
  if (type == "EMAIL") return kEmailToken;
  if (type == "URL") return kUrlToken;
  if (type == "HANDLE" || type == "USERNAME") return kHandleToken;
  if (type == "PHONE") return kPhoneToken;
  // Names and any other identifying detail.
  return kNameToken;
}

bool inside_token_vocabulary(std::string_view span) {
  static constexpr std::string_view kAllTokens = "[EMAIL][URL][HANDLE][PHONE][NAME][LOCATION]";
  return kAllTokens.find(span) != std::string_view::npos;
}

struct FlaggedSpan {
  std::string text;
  std::string type;
};

ParseOutcome<std::vector<FlaggedSpan>> parse_spans(std::string_view reply) {
  auto j = extract_json_object(reply);
  if (!j) return ParseOutcome<std::vector<FlaggedSpan>>::fail("no JSON object in reply");
  auto it = j->find("spans");
  if (it == j->end() || !it->is_array()) {
    return ParseOutcome<std::vector<FlaggedSpan>>::fail("missing \"spans\" array");
  }
  std::vector<FlaggedSpan> out;
  for (const auto& s : *it) {
    if (!s.is_object() || !s.contains("text") || !s["text"].is_string()) {
      return ParseOutcome<std::vector<FlaggedSpan>>::fail("span entries need a \"text\" string");
    }
    auto type = s.contains("type") && s["type"].is_string() ? s["type"].get<std::string>() : std::string("OTHER");
    out.push_back({s["text"].get<std::string>(), std::move(type)});
  }
  return ParseOutcome<std::vector<FlaggedSpan>>::ok(std::move(out));
}

}  // namespace

std::string redact_patterns(std::string_view text, std::vector<RedactionSpan>* report) {
  std::string input(text);
  std::string out;
  out.reserve(input.size());
  std::size_t copied = 0;
  for (auto it = std::sregex_iterator(input.begin(), input.end(), pattern()); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    std::string_view token;
    if (m[1].matched) {
      token = kEmailToken;
    } else if (m[2].matched) {
      token = kUrlToken;
    } else if (m[3].matched) {
      token = kHandleToken;
    } else if (m[4].matched && digit_count(m.str(4)) >= 7) {
      token = kPhoneToken;
    } else {
      continue;
    }
    auto pos = static_cast<std::size_t>(m.position(0));
    out.append(input, copied, pos - copied);
    out.append(token);
    copied = pos + static_cast<std::size_t>(m.length(0));
    if (report) report->push_back({pos, m.str(0), std::string(token), RedactionPass::Pattern});
  }
  out.append(input, copied, std::string::npos);
  return out;
}

RedactionResult redact_pii(std::string_view text, const ModelEndpoint& backend, const TemplateRegistry& templates) {
  if (trim(text).empty()) throw Error(Errc::Precondition, "text to redact is empty");
  RedactionResult result;
  result.text = redact_patterns(text, &result.report);
  if (!backend) return result;

  std::vector<FlaggedSpan> spans;
  try {
    auto request = backend.request(templates.render("pii_redaction", {{"post", result.text}}));
    spans = complete_with_reprompts<std::vector<FlaggedSpan>>(*backend.backend, std::move(request), parse_spans,
                                                              kMaxReprompts, templates.get("reprompt_format").body);
  } catch (const Error& e) {
    result.partial = true;
    result.backend_error = e.what();
    return result;
  }

  std::stable_sort(spans.begin(), spans.end(),
                   [](const FlaggedSpan& a, const FlaggedSpan& b) { return a.text.size() > b.text.size(); });
  for (const auto& span : spans) {
    if (trim(span.text).empty() || inside_token_vocabulary(span.text)) continue;
    auto token = token_for_type(span.type);
    for (auto pos = result.text.find(span.text); pos != std::string::npos;
         pos = result.text.find(span.text, pos + token.size())) {
      result.text.replace(pos, span.text.size(), token);
      result.report.push_back({pos, span.text, std::string(token), RedactionPass::Backend});
    }
  }
  return result;
}

}  // namespace therasim
