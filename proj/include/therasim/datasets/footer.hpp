#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "therasim/core/catalog.hpp"

namespace therasim {

struct FooterParse {
  std::vector<StrategyRef> strategies;  // canonical, de-duplicated, in footer order
  std::vector<std::string> warnings;    // dropped "etc." tokens, unknown or repeated items
  bool lists_actionable = false;        // footer names numbered actionable strategies
  std::size_t line_index = 0;           // 0-based line of the footer in the text
};

// Parses the last line that begins with "**Strategies:**" (case-insensitive,
// leading whitespace allowed; "**Strategies**:" is also accepted). Items are
// split on commas and semicolons outside parentheses and canonicalized; "etc."
// is dropped with a warning. Throws Error(NoFooter) when no such line exists.
FooterParse parse_strategy_footer(std::string_view text);

std::optional<FooterParse> find_strategy_footer(std::string_view text);

// The text with the footer line removed and trailing whitespace trimmed.
std::string strip_strategy_footer(std::string_view text);

}  // namespace therasim
