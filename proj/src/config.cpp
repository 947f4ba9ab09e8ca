#include "levylt/config.hpp"

#include "levylt/error.hpp"
#include "levylt/text.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace levylt {

namespace {

const std::set<std::string> kNumericKeys = {"step", "dx", "horizon", "xmax", "n", "paths", "seed", "threads", "delta"};
const std::set<std::string> kRunKeys = {"zeta", "mu",  "scheme", "kappa", "p",    "x",
                                        "b1",   "zeta1", "b2",   "zeta2", "bias", "u0"};
const std::set<std::string> kModelKeys = {"family", "b", "c", "rate", "mean", "atoms", "scale", "index", "tempering"};

long parse_integer(const std::string& text, const std::string& key) {
  const double v = parse_number(text, "key '" + key + "'");
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw UsageError("key '" + key + "': expected an integer, got '" + text + "'");
  return static_cast<long>(v);
}

std::uint64_t parse_seed(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used, 10);
    if (used != text.size() || text.find('-') != std::string::npos) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("key '" + key + "': expected a non-negative integer seed, got '" + text + "'");
  }
}

}  // namespace

Sections parse_ini(std::string_view text) {
  Sections out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw UsageError("config line " + std::to_string(line_no) + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty()) throw UsageError("config line " + std::to_string(line_no) + ": key outside of a section");
    out[section][trim(std::string_view(line).substr(0, eq))] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

Sections read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string text = buf.str();
  const std::string open = "# --- config ---", close = "# --- end config ---";
  const auto a = text.find(open);
  if (a == std::string::npos) return parse_ini(text);
  const auto b = text.find(close, a);
  if (b == std::string::npos) throw UsageError("config block in '" + path + "' is not terminated");
  std::istringstream block(text.substr(a + open.size(), b - a - open.size()));
  std::string line, ini;
  while (std::getline(block, line)) {
    if (line.rfind("# ", 0) == 0) line = line.substr(2);
    else if (line.rfind('#', 0) == 0) line = line.substr(1);
    ini += line + "\n";
  }
  return parse_ini(ini);
}

RunConfig parse_config(const Sections& file, const std::vector<std::pair<std::string, std::string>>& overrides,
                       const char* env_seed) {
  Sections merged = file;
  for (const auto& [dotted, value] : overrides) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos) throw UsageError("override '" + dotted + "' must be written section.key");
    merged[dotted.substr(0, dot)][dotted.substr(dot + 1)] = value;
  }
  for (const auto& [section, keys] : merged) {
    const std::set<std::string>* known = section == "model"     ? &kModelKeys
                                         : section == "numeric" ? &kNumericKeys
                                         : section == "run"     ? &kRunKeys
                                                                : nullptr;
    if (!known) throw UsageError("unknown config section '" + section + "'");
    for (const auto& kv : keys)
      if (!known->count(kv.first)) throw UsageError("unknown key '" + section + "." + kv.first + "'");
  }

  RunConfig cfg;
  if (!merged.count("model") || merged.at("model").empty()) throw UsageError("config has no [model] block");
  cfg.model_keys = merged.at("model");
  cfg.model = model_from_keys(cfg.model_keys);
  require_valid(cfg.model);
  cfg.model_keys = model_to_keys(cfg.model);

  auto num = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    auto s = merged.find(section);
    if (s == merged.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  };
  auto real = [&](const std::string& section, const std::string& key, double& target) {
    if (auto v = num(section, key)) target = parse_number(*v, "key '" + section + "." + key + "'");
  };

  NumericBlock& nb = cfg.numeric;
  real("numeric", "step", nb.step);
  real("numeric", "dx", nb.dx);
  real("numeric", "horizon", nb.horizon);
  real("numeric", "xmax", nb.xmax);
  if (auto v = num("numeric", "n")) nb.n = static_cast<int>(parse_integer(*v, "numeric.n"));
  if (auto v = num("numeric", "paths")) nb.paths = parse_integer(*v, "numeric.paths");
  if (auto v = num("numeric", "threads")) nb.threads = static_cast<unsigned>(std::max(0L, parse_integer(*v, "numeric.threads")));
  if (auto v = num("numeric", "delta")) nb.delta = parse_number(*v, "key 'numeric.delta'");
  if (auto v = num("numeric", "seed"))
    nb.seed = parse_seed(*v, "numeric.seed");
  else if (env_seed && *env_seed)
    nb.seed = parse_seed(env_seed, "LEVYLT_SEED");

  RunBlock& rb = cfg.run;
  real("run", "zeta", rb.zeta);
  real("run", "kappa", rb.kappa);
  real("run", "p", rb.p);
  real("run", "x", rb.x);
  real("run", "b1", rb.b1);
  real("run", "zeta1", rb.zeta1);
  real("run", "b2", rb.b2);
  real("run", "zeta2", rb.zeta2);
  real("run", "bias", rb.bias);
  if (auto v = num("run", "u0")) rb.u0 = parse_number(*v, "key 'run.u0'");
  if (auto v = num("run", "mu")) rb.mu = *v;
  if (auto v = num("run", "scheme")) rb.scheme = *v;

  std::vector<std::string> bad;
  if (!(nb.step > 0.0)) bad.push_back("numeric.step must be positive");
  if (!(nb.dx > 0.0)) bad.push_back("numeric.dx must be positive");
  if (!(nb.horizon > 0.0)) bad.push_back("numeric.horizon must be positive");
  if (!(nb.xmax > 0.0)) bad.push_back("numeric.xmax must be positive");
  if (nb.n < 1) bad.push_back("numeric.n must be >= 1");
  if (nb.paths < 1) bad.push_back("numeric.paths must be >= 1");
  if (nb.delta && !(*nb.delta > 0.0)) bad.push_back("numeric.delta must be positive");
  if (!(rb.zeta >= 0.0)) bad.push_back("run.zeta must be non-negative");
  if (!(rb.zeta1 >= 0.0) || !(rb.zeta2 >= 0.0)) bad.push_back("run.zeta1 and run.zeta2 must be non-negative");
  if (!(rb.b1 >= 0.0) || !(rb.b2 >= 0.0)) bad.push_back("run.b1 and run.b2 must be non-negative");
  if (!(rb.p >= 1.0)) bad.push_back("run.p must be >= 1");
  if (!(rb.kappa > 0.0 && rb.kappa <= 0.5)) bad.push_back("run.kappa must lie in (0, 1/2]");
  if (!(rb.x >= 0.0)) bad.push_back("run.x must be non-negative");
  if (!(rb.bias >= 0.0)) bad.push_back("run.bias must be non-negative");
  if (rb.u0 && !(*rb.u0 > 0.0)) bad.push_back("run.u0 must be positive");
  if (rb.scheme != "cmj" && rb.scheme != "cir" && rb.scheme != "euler") bad.push_back("run.scheme must be cmj, cir or euler");
  if (!bad.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& b : bad) msg += " " + b + ";";
    msg.pop_back();
    throw UsageError(msg);
  }
  cfg.mu = parse_boundary_measure(rb.mu);
  return cfg;
}

std::vector<std::string> RunConfig::echo() const {
  std::vector<std::string> out;
  out.push_back("[model]");
  // family first, then the remaining keys alphabetically
  out.push_back("family = " + model_keys.at("family"));
  for (const auto& [k, v] : model_keys)
    if (k != "family") out.push_back(k + " = " + v);
  out.push_back("[numeric]");
  out.push_back("step = " + fmt17(numeric.step));
  out.push_back("dx = " + fmt17(numeric.dx));
  out.push_back("horizon = " + fmt17(numeric.horizon));
  out.push_back("xmax = " + fmt17(numeric.xmax));
  out.push_back("n = " + std::to_string(numeric.n));
  out.push_back("paths = " + std::to_string(numeric.paths));
  out.push_back("seed = " + std::to_string(numeric.seed));
  if (numeric.delta) out.push_back("delta = " + fmt17(*numeric.delta));
  out.push_back("[run]");
  out.push_back("zeta = " + fmt17(run.zeta));
  out.push_back("mu = " + run.mu);
  out.push_back("scheme = " + run.scheme);
  out.push_back("kappa = " + fmt17(run.kappa));
  out.push_back("p = " + fmt17(run.p));
  out.push_back("x = " + fmt17(run.x));
  out.push_back("b1 = " + fmt17(run.b1));
  out.push_back("zeta1 = " + fmt17(run.zeta1));
  out.push_back("b2 = " + fmt17(run.b2));
  out.push_back("zeta2 = " + fmt17(run.zeta2));
  out.push_back("bias = " + fmt17(run.bias));
  if (run.u0) out.push_back("u0 = " + fmt17(*run.u0));
  return out;
}

}  // namespace levylt
