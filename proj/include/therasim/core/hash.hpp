#pragma once

#include <string>
#include <string_view>

namespace therasim {

// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

// Short stable identifier: prefix + first 16 hex digits of the SHA-256.
std::string content_id(std::string_view prefix, std::string_view bytes);

}  // namespace therasim
