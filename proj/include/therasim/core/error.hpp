#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace therasim {

enum class Errc {
  InvalidArgument,
  Precondition,
  UnknownStrategy,
  UnboundPlaceholder,
  UnknownTemplate,
  Transport,
  BadResponse,
  BadCredential,
  Exhausted,
  ScriptMismatch,
  EmptyInput,
  MalformedAfterRetries,
  IncompletePermutation,
  TooFewDistinct,
  NoFooter,
  SchemaMismatch,
  Corruption,
  Io,
  NotFound,
  Conflict,
};

std::string_view to_string(Errc code);

// All library failures surface as this exception type; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace therasim
