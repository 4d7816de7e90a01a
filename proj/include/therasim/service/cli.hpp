#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "therasim/backends/config.hpp"
#include "therasim/simulation/batch.hpp"

namespace therasim {

// One endpoint per agent role, built from backend settings. The scripted
// kind reads a JSON file mapping roles ("patient", "therapist", "judge",
// "attribution", "generator") to scripts; every call to the factory replays
// the scripts from the start. A role missing from the script has no backend.
class BackendProvider {
 public:
  explicit BackendProvider(BackendSettings settings);

  ModelEndpoint endpoint(std::string_view role) const;
  SessionBackends session_backends() const;
  BackendFactory factory() const;

 private:
  BackendSettings settings_;
  Json scripts_;
};

// Entry point behind the `therasim` binary. Exit status: 0 success, 1 runtime
// failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace therasim
