#pragma once

// Helpers for pulling structured values out of free-form model replies.

#include <optional>
#include <string>
#include <string_view>

#include "therasim/core/types.hpp"

namespace therasim {

// Finds the first balanced top-level JSON object in the text (code fences and
// surrounding prose are ignored) and parses it. Never throws.
std::optional<Json> extract_json_object(std::string_view text);

// Accepts a JSON number or a string holding a plain decimal ("3.7").
// Returns nullopt for anything else, including non-finite values.
std::optional<double> json_decimal(const Json& value);

std::string_view trim(std::string_view s);

}  // namespace therasim
