#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace levylt {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitError = 2;

/// One parsed command line, before the configuration is resolved.
struct Invocation {
  std::string command;  // scale, approx, volterra, simulate, verify, u0
  std::string target;   // verify: mean, laplace, moment, holder, compare
  std::optional<std::string> config_path;
  /// `section.key` = value, applied over the file in order.
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string out;         // empty: standard output
  std::string dump_paths;  // simulate: directory for one CSV per path
};

/// Section-qualified key that `--dx` sets for this command: the solver grid for scale and
/// volterra, the path grid otherwise.
std::string dx_key_for(const std::string& command);

/// Runs a command. CSV goes to `inv.out` or `out`; diagnostics and wall time go to `err`.
/// Returns 0 on success or a passing check, 1 on a failing check, 2 on any error.
int run(const Invocation& inv, std::ostream& out, std::ostream& err);

}  // namespace levylt
