#include "levylt/cli.hpp"

#include "levylt/config.hpp"
#include "levylt/cp_approx.hpp"
#include "levylt/error.hpp"
#include "levylt/scale_function.hpp"
#include "levylt/sim.hpp"
#include "levylt/text.hpp"
#include "levylt/verify.hpp"
#include "levylt/volterra.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef LEVYLT_VERSION
#define LEVYLT_VERSION "dev"
#endif

namespace levylt {

using Eigen::Index;
using Eigen::VectorXd;

namespace {

using Meta = std::vector<std::pair<std::string, std::string>>;

void write_header(std::ostream& os, const std::string& title, const RunConfig& cfg, const Meta& meta) {
  os << "# levylt " << LEVYLT_VERSION << "\n";
  os << "# command: " << title << "\n";
  os << "# --- config ---\n";
  for (const auto& line : cfg.echo()) os << "# " << line << "\n";
  os << "# --- end config ---\n";
  os << "# seed: " << cfg.numeric.seed << "\n";
  for (const auto& [k, v] : meta) os << "# " << k << ": " << v << "\n";
}

void write_row(std::ostream& os, std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    os << (first ? "" : ",") << fmt12(v);
    first = false;
  }
  os << "\n";
}

EnsembleRequest ensemble_request(const RunConfig& cfg) {
  EnsembleRequest r;
  r.scheme = parse_scheme(cfg.run.scheme);
  r.model = cfg.model;
  r.zeta = cfg.run.zeta;
  r.n = cfg.numeric.n;
  r.step = cfg.numeric.step;
  r.paths = cfg.numeric.paths;
  r.grid = PathGrid{cfg.numeric.dx, cfg.numeric.xmax};
  r.seed = cfg.numeric.seed;
  r.threads = cfg.numeric.threads;
  return r;
}

struct Outcome {
  std::string title;
  Meta meta;
  std::string body;  // CSV column header and rows
  std::optional<bool> verdict;
  std::string summary;
};

Outcome cmd_scale(const RunConfig& cfg) {
  const ScaleTable t = scale_table(cfg.model, cfg.numeric.step, cfg.numeric.horizon);
  Outcome o;
  o.title = "scale";
  o.meta.emplace_back("step", fmt12(t.step));
  o.meta.emplace_back("horizon", fmt12(t.horizon));
  if (std::isfinite(integrated_tail_at_zero(cfg.model.jumps)))
    o.meta.emplace_back("identity_residual", fmt12(identity_residual(t, cfg.model)));
  std::ostringstream os;
  os << "x,W,Wp,Wpp\n";
  for (Index i = 0; i < t.size(); ++i) write_row(os, {t.x(i), t.W[i], t.Wp[i], t.Wpp[i]});
  o.body = os.str();
  return o;
}

Outcome cmd_approx(const RunConfig& cfg) {
  const double delta = cfg.numeric.delta.value_or(default_resolvent_step(cfg.model));
  const CpApprox a = build_approx(cfg.model, cfg.numeric.n, delta, cfg.numeric.horizon);
  Outcome o;
  o.title = "approx";
  o.meta = {{"n", std::to_string(a.n)},
            {"eta", fmt12(a.eta)},
            {"theta", fmt12(a.theta)},
            {"gamma", fmt12(a.gamma)},
            {"p", fmt12(a.p)},
            {"mean_lifetime", fmt12(a.mean_lifetime)},
            {"criticality", fmt12(a.criticality())},
            {"delta", fmt12(a.delta)},
            {"horizon_fast", fmt12(a.horizon_fast)}};
  std::ostringstream os;
  os << "t,Pi_bar,R_pi\n";
  for (Index i = 0; i < a.R_pi.size(); ++i) write_row(os, {static_cast<double>(i) * a.delta, a.Pi_bar[i], a.R_pi[i]});
  o.body = os.str();
  return o;
}

Outcome cmd_volterra(const RunConfig& cfg) {
  const ScaleTable t = scale_table(cfg.model, cfg.numeric.step, cfg.numeric.horizon);
  const VolterraSolution s = solve_V(cfg.model, t, cfg.mu, cfg.numeric.horizon);
  Outcome o;
  o.title = "volterra";
  o.meta = {{"picard_sweeps", std::to_string(s.iterations)},
            {"windows", std::to_string(s.residual_history.size())},
            {"final_change", fmt12(s.residual)}};
  std::ostringstream os;
  os << "t,V,FV\n";
  for (Index i = 0; i < s.V.size(); ++i) write_row(os, {static_cast<double>(i) * s.step, s.V[i], s.FV[i]});
  o.body = os.str();
  return o;
}

void dump_paths(const PathEnsemble& ens, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (std::size_t p = 0; p < ens.size(); ++p) {
    char name[32];
    std::snprintf(name, sizeof name, "path_%06zu.csv", p);
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw UsageError("cannot write into '" + dir + "'");
    f << "# scheme: " << to_string(ens.scheme) << "\n# path_seed: " << ens.paths[p].seed << "\nx,X\n";
    for (Index i = 0; i < ens.paths[p].values.size(); ++i) write_row(f, {ens.grid.x(i), ens.paths[p].values[i]});
  }
}

Outcome cmd_simulate(const RunConfig& cfg, const std::string& dump_dir) {
  const PathEnsemble ens = simulate_ensemble(ensemble_request(cfg));
  if (!dump_dir.empty()) dump_paths(ens, dump_dir);
  Outcome o;
  o.title = "simulate";
  o.meta = {{"scheme", to_string(ens.scheme)}, {"paths", std::to_string(ens.size())}};
  std::ostringstream os;
  os << "x,mean,se\n";
  for (Index i = 0; i < ens.grid.size(); ++i) {
    const VectorXd col = ens.column(i);
    const MeanSe m = mean_and_se({col.data(), col.data() + col.size()});
    write_row(os, {ens.grid.x(i), m.mean, m.se});
  }
  o.body = os.str();
  return o;
}

Outcome from_report(const std::string& title, const VerificationReport& r) {
  Outcome o;
  o.title = title;
  o.meta.emplace_back("quantity", r.quantity);
  o.meta.emplace_back("rule", r.rule);
  for (const auto& kv : r.metadata) o.meta.push_back(kv);
  std::ostringstream os;
  os << "x,estimate,se,prediction,z,bias_budget,pass\n";
  for (const auto& p : r.points) write_row(os, {p.x, p.estimate, p.se, p.prediction, p.z, p.bias_budget, p.pass ? 1.0 : 0.0});
  o.body = os.str();
  o.verdict = r.pass;
  o.summary = r.quantity;
  return o;
}

Outcome cmd_verify(const RunConfig& cfg, const std::string& target) {
  const std::string title = "verify " + target;
  if (target == "mean") {
    const PathEnsemble ens = simulate_ensemble(ensemble_request(cfg));
    const ScaleTable t = scale_table(cfg.model, cfg.numeric.step, cfg.numeric.xmax + cfg.numeric.step);
    return from_report(title, estimate_mean_curve(ens, cfg.model, t, cfg.run.bias));
  }
  if (target == "laplace") {
    LaplaceRequest q;
    q.model = cfg.model;
    q.zeta = cfg.run.zeta;
    q.mu = cfg.mu;
    q.x = cfg.run.x;
    q.scheme = parse_scheme(cfg.run.scheme);
    q.paths = cfg.numeric.paths;
    q.n = cfg.numeric.n;
    q.step = cfg.numeric.step;
    q.dx = cfg.numeric.dx;
    q.seed = cfg.numeric.seed;
    q.threads = cfg.numeric.threads;
    q.bias_budget = cfg.run.bias;
    q.u0 = cfg.run.u0;
    return from_report(title, verify_laplace(q));
  }
  if (target == "moment") {
    const PathEnsemble ens = simulate_ensemble(ensemble_request(cfg));
    const ScaleTable t = scale_table(cfg.model, cfg.numeric.step, cfg.numeric.xmax + cfg.numeric.step);
    return from_report(title, estimate_moment(ens, t, cfg.run.p));
  }
  if (target == "holder") {
    if (cfg.run.scheme == "cmj") throw UsageError("verify holder: CMJ paths are step functions; use the cir or euler scheme");
    const PathEnsemble ens = simulate_ensemble(ensemble_request(cfg));
    const HolderStudy h = holder_refinement(ens, cfg.run.kappa);
    Outcome o;
    o.title = title;
    o.meta = {{"quantity", "holder"},
              {"rule", "first and second moments of the coefficient agree within 2x between dx and 2dx"},
              {"kappa", fmt12(cfg.run.kappa)},
              {"paths", std::to_string(ens.size())}};
    std::ostringstream os;
    os << "dx,mean,se,second_moment\n";
    write_row(os, {ens.grid.dx, h.fine.mean, h.fine.se, h.fine_second_moment});
    write_row(os, {2.0 * ens.grid.dx, h.coarse.mean, h.coarse.se, h.coarse_second_moment});
    o.body = os.str();
    o.verdict = h.pass;
    o.summary = "holder";
    return o;
  }
  if (target == "compare") {
    const PathGrid grid{cfg.numeric.dx, cfg.numeric.xmax};
    const CoupledEnsemble ce = simulate_coupled_ensemble(cfg.model, cfg.run.b1, cfg.run.zeta1, cfg.run.b2, cfg.run.zeta2,
                                                         cfg.numeric.n, grid, cfg.numeric.paths, cfg.numeric.seed,
                                                         cfg.numeric.threads);
    const long violations = check_comparison(ce.first, ce.second);
    Outcome o;
    o.title = title;
    o.meta = {{"quantity", "comparison"},
              {"rule", "zero (path, x) pairs with X1 > X2"},
              {"paths", std::to_string(cfg.numeric.paths)},
              {"violations", std::to_string(violations)}};
    std::ostringstream os;
    os << "x,mean1,mean2,violations\n";
    for (Index i = 0; i < grid.size(); ++i) {
      const VectorXd a = ce.first.column(i), b = ce.second.column(i);
      const double v = static_cast<double>((a.array() > b.array()).count());
      write_row(os, {grid.x(i), mean_and_se({a.data(), a.data() + a.size()}).mean,
                     mean_and_se({b.data(), b.data() + b.size()}).mean, v});
    }
    o.body = os.str();
    o.verdict = violations == 0;
    o.summary = "comparison (" + std::to_string(violations) + " violations)";
    return o;
  }
  throw UsageError("unknown verify target '" + target + "' (expected mean, laplace, moment, holder or compare)");
}

Outcome cmd_u0(const RunConfig& cfg) {
  const MeanSe m = estimate_u0(cfg.model, cfg.numeric.paths, cfg.numeric.n, cfg.numeric.seed, cfg.numeric.threads);
  Outcome o;
  o.title = "u0";
  o.meta = {{"estimator", "passages through 0 of the n-th compound-Poisson approximation, divided by n"},
            {"caveat", "Monte-Carlo surrogate with unquantified O(1/n) bias"}};
  std::ostringstream os;
  os << "u0,se,paths,n\n";
  write_row(os, {m.mean, m.se, static_cast<double>(m.count), static_cast<double>(cfg.numeric.n)});
  o.body = os.str();
  return o;
}

}  // namespace

std::string dx_key_for(const std::string& command) {
  if (command == "approx") return "numeric.delta";
  return (command == "scale" || command == "volterra") ? "numeric.step" : "numeric.dx";
}

int run(const Invocation& inv, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  try {
    Sections file;
    if (inv.config_path) file = read_config_file(*inv.config_path);
    const RunConfig cfg = parse_config(file, inv.overrides, std::getenv("LEVYLT_SEED"));

    Outcome o;
    if (inv.command == "scale")
      o = cmd_scale(cfg);
    else if (inv.command == "approx")
      o = cmd_approx(cfg);
    else if (inv.command == "volterra")
      o = cmd_volterra(cfg);
    else if (inv.command == "simulate")
      o = cmd_simulate(cfg, inv.dump_paths);
    else if (inv.command == "verify")
      o = cmd_verify(cfg, inv.target);
    else if (inv.command == "u0")
      o = cmd_u0(cfg);
    else
      throw UsageError("unknown command '" + inv.command + "'");

    std::ostringstream doc;
    write_header(doc, o.title, cfg, o.meta);
    doc << o.body;
    if (inv.out.empty()) {
      out << doc.str();
    } else {
      std::ofstream f(inv.out, std::ios::binary);
      if (!f) throw UsageError("cannot open output file '" + inv.out + "'");
      f << doc.str();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    err << "wall time: " << fmt12(secs) << " s\n";
    if (o.verdict) {
      std::ostream& s = inv.out.empty() ? err : out;
      s << (*o.verdict ? "PASS " : "FAIL ") << o.title << ": " << o.summary << "\n";
      return *o.verdict ? kExitPass : kExitFail;
    }
    return kExitPass;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace levylt
