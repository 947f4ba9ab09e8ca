#pragma once

#include "levylt/levy_model.hpp"
#include "levylt/volterra.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace levylt {

using Sections = std::map<std::string, std::map<std::string, std::string>>;

/// INI text: `[section]` headers, `key = value` lines, `#` or `;` comments.
Sections parse_ini(std::string_view text);

/// Reads a config file. A file containing a `# --- config ---` block (any CSV written by this
/// tool) yields the block it embeds, so outputs can be fed back as configs.
Sections read_config_file(const std::string& path);

struct NumericBlock {
  double step = 1e-3;   // scale / Volterra / Euler grid
  double dx = 0.01;     // path grid
  double horizon = 5.0;
  double xmax = 3.0;
  int n = 100;
  long paths = 10000;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: all hardware threads
  std::optional<double> delta;  // resolvent step on the fast axis; default c/50
};

struct RunBlock {
  double zeta = 1.0;
  std::string mu = "delta:0:1";
  std::string scheme = "cmj";
  double kappa = 0.4;
  double p = 2.0;
  double x = 1.0;
  double b1 = 1.0, zeta1 = 1.0, b2 = 0.0, zeta2 = 1.0;
  double bias = 0.0;
  std::optional<double> u0;
};

struct RunConfig {
  std::map<std::string, std::string> model_keys;
  LevyModel model;
  NumericBlock numeric;
  RunBlock run;
  BoundaryMeasure mu;

  /// Effective configuration, one `[section]` or `key = value` per line, round-trippable.
  std::vector<std::string> echo() const;
};

/// Merges file sections with `section.key = value` overrides (later wins), falls back to
/// `env_seed` when no seed is given, and validates everything. Unknown sections or keys are a
/// UsageError naming the key; model violations are a ParameterError.
RunConfig parse_config(const Sections& file, const std::vector<std::pair<std::string, std::string>>& overrides,
                       const char* env_seed = nullptr);

}  // namespace levylt
