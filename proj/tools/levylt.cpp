// Command-line front end: parses flags into an Invocation and hands it to levylt::run.

#include "levylt/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <utility>
#include <string>
#include <vector>

namespace {

struct FlagTarget {
  std::string flag;
  std::string key;  // section.key; "dx" is resolved per command
  std::string help;
};

const std::vector<FlagTarget> kFlags = {
    {"--zeta", "run.zeta", "initial local time"},
    {"--mu", "run.mu", "boundary measure, e.g. delta:0:1.0,density:0:1:0.5"},
    {"--scheme", "run.scheme", "cmj, cir or euler"},
    {"--kappa", "run.kappa", "Hölder index"},
    {"--p", "run.p", "moment order"},
    {"--x", "run.x", "evaluation level"},
    {"--b1", "run.b1", "drift of the smaller population"},
    {"--zeta1", "run.zeta1", "initial local time of the smaller population"},
    {"--b2", "run.b2", "drift of the larger population"},
    {"--zeta2", "run.zeta2", "initial local time of the larger population"},
    {"--bias", "run.bias", "declared bias budget"},
    {"--u0", "run.u0", "mean total local time at 0 (total-local-time variant)"},
    {"--n", "numeric.n", "scaling index of the compound-Poisson approximation"},
    {"--paths", "numeric.paths", "number of Monte-Carlo paths"},
    {"--dx", "dx", "grid step (solver grid for scale/volterra, path grid otherwise)"},
    {"--step", "numeric.step", "solver and Euler grid step"},
    {"--horizon", "numeric.horizon", "solver horizon"},
    {"--xmax", "numeric.xmax", "largest spatial level of simulated paths"},
    {"--delta", "numeric.delta", "resolvent step on the fast axis"},
    {"--seed", "numeric.seed", "master seed (falls back to LEVYLT_SEED)"},
    {"--threads", "numeric.threads", "worker cap; results do not depend on it"},
};

struct Captured {
  std::string config;
  std::string out;
  std::string dump;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
};

void add_common(CLI::App* cmd, Captured& cap) {
  cmd->add_option("--config", cap.config, "INI config file or a CSV written by this tool");
  cmd->add_option("--out", cap.out, "output CSV (default: standard output)");
  cmd->add_option("--set", cap.sets, "override as section.key=value (repeatable)");
  for (const auto& f : kFlags) cmd->add_option(f.flag, cap.flags[f.flag], f.help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local-time fields of spectrally positive Lévy processes: simulation and verification"};
  app.set_version_flag("--version", std::string("levylt ") + LEVYLT_VERSION);
  app.require_subcommand(1);

  Captured cap;
  std::string target;
  std::vector<CLI::App*> commands;
  const std::pair<const char*, const char*> plain[] = {
      {"scale", "tabulate W, W' and W'' on the solver grid"},
      {"approx", "compound-Poisson approximation parameters and rescaled resolvent"},
      {"volterra", "solve for V and F(V) with the given boundary measure"},
      {"simulate", "simulate local-time paths (cmj, cir or euler)"},
      {"u0", "estimate the mean total local time at 0"},
  };
  for (const auto& [name, about] : plain) {
    auto* cmd = app.add_subcommand(name, about);
    add_common(cmd, cap);
    commands.push_back(cmd);
  }
  commands[3]->add_option("--dump-paths", cap.dump, "directory for one CSV per path");
  auto* verify = app.add_subcommand("verify", "Monte-Carlo checks against analytic predictions");
  verify->add_option("target", target, "mean, laplace, moment, holder or compare")
      ->required()
      ->check(CLI::IsMember({"mean", "laplace", "moment", "holder", "compare"}));
  add_common(verify, cap);
  commands.push_back(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : levylt::kExitError;
  }

  levylt::Invocation inv;
  for (auto* cmd : commands)
    if (cmd->parsed()) inv.command = cmd->get_name();
  inv.target = target;
  if (!cap.config.empty()) inv.config_path = cap.config;
  inv.out = cap.out;
  inv.dump_paths = cap.dump;
  for (const auto& f : kFlags) {
    const std::string& value = cap.flags[f.flag];
    if (value.empty()) continue;
    inv.overrides.emplace_back(f.key == "dx" ? levylt::dx_key_for(inv.command) : f.key, value);
  }
  for (const auto& s : cap.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects section.key=value, got '" << s << "'\n";
      return levylt::kExitError;
    }
    inv.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return levylt::run(inv, std::cout, std::cerr);
}
