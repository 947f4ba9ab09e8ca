// Acceptance suite. `acceptance N...` runs the listed criteria (all of them without arguments) and
// prints one PASS/FAIL line per criterion. Exit status is non-zero when any criterion fails.

#include "levylt/cli.hpp"
#include "levylt/cp_approx.hpp"
#include "levylt/grid.hpp"
#include "levylt/scale_function.hpp"
#include "levylt/sim.hpp"
#include "levylt/text.hpp"
#include "levylt/verify.hpp"
#include "levylt/volterra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace levylt;
using Eigen::Index;
using Eigen::VectorXd;

namespace {

struct Result {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    add(std::string(ok ? "" : "FAILED ") + what);
  }
  void add(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const ExponentialJumps kUnitExp{1.0, 1.0};

double max_abs_diff(const VectorXd& a, const std::function<double(double)>& f, double step) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - f(static_cast<double>(i) * step)));
  return worst;
}

MeanSe column_stats(const PathEnsemble& ens, double x) {
  const VectorXd col = ens.column(ens.grid.index_of(x));
  return mean_and_se(std::vector<double>(col.data(), col.data() + col.size()));
}

// 1 ------------------------------------------------------------------------------------------
Result brownian_scale() {
  Result r;
  for (auto [b, c] : {std::pair{0.0, 1.0}, {1.0, 1.0}, {2.0, 0.5}}) {
    const ScaleTable t = scale_table(LevyModel{b, c, ZeroJumps{}}, 1e-3, 5.0);
    const double err = max_abs_diff(t.Wp, [&](double x) { return std::exp(-b * x / c) / c; }, t.step);
    r.require(err <= 1e-6, "(b,c)=(" + g(b) + "," + g(c) + ") max|W'-closed form|=" + g(err));
  }
  return r;
}

// 2 ------------------------------------------------------------------------------------------
Result identity_residuals() {
  Result r;
  const LevyModel m{0.0, 1.0, kUnitExp};
  const LevyModel shifted{0.5, 1.0, kUnitExp};
  double id[2], ds[2];
  const double steps[] = {1e-3, 5e-4};
  for (int k = 0; k < 2; ++k) {
    const ScaleTable tb = scale_table(m, steps[k], 5.0);
    const ScaleTable tbeta = scale_table(shifted, steps[k], 5.0);
    id[k] = identity_residual(tb, m);
    ds[k] = drift_shift_residual(tb, tbeta, m.b, shifted.b);
  }
  r.require(id[0] <= 1e-6, "identity residual " + g(id[0]));
  r.require(ds[0] <= 1e-5, "drift-shift residual " + g(ds[0]));
  r.require(id[0] >= 3.0 * id[1], "identity reduction on halving " + g(id[0] / id[1]) + "x");
  r.require(ds[0] >= 3.0 * ds[1], "drift-shift reduction on halving " + g(ds[0] / ds[1]) + "x");
  return r;
}

// 3 ------------------------------------------------------------------------------------------
Result laplace_crosscheck_all() {
  Result r;
  const std::pair<const char*, LevyModel> models[] = {{"exponential", LevyModel{0.0, 1.0, kUnitExp}},
                                                      {"brownian", LevyModel{1.0, 1.0, ZeroJumps{}}},
                                                      {"tempered", LevyModel{0.2, 1.0, TemperedPowerJumps{0.5, 1.2, 1.0}}}};
  for (const auto& [name, m] : models) {
    const ScaleTable t = scale_table(m, 1e-3, 12.0);
    double worst = 0.0;
    for (double lambda : {1.0, 2.0, 5.0}) worst = std::max(worst, laplace_crosscheck(t, m, lambda));
    r.require(worst <= 1e-4, std::string(name) + " worst relative residual " + g(worst));
  }
  return r;
}

// 4 ------------------------------------------------------------------------------------------
Result resolvent() {
  Result r;
  const double c = 1.0, gamma = 0.8, delta = 1e-3;
  VectorXd kernel(20001);
  for (Index i = 0; i < kernel.size(); ++i) kernel[i] = gamma * std::exp(-static_cast<double>(i) * delta / c);
  const VectorXd R = linear_resolvent(kernel, delta);
  const double err = max_abs_diff(R, [&](double t) { return gamma * std::exp(-(1.0 / c - gamma) * t); }, delta);
  r.require(err <= 1e-5, "closed-form error " + g(err));

  const LevyModel models[] = {LevyModel{0.0, 1.0, ZeroJumps{}}, LevyModel{0.5, 1.0, kUnitExp},
                              LevyModel{0.3, 0.8, AtomicJumps{{{1.0, 0.5}, {0.5, 2.0}}}},
                              LevyModel{0.2, 1.0, TemperedPowerJumps{0.5, 1.2, 1.0}}, LevyModel{1.0, 2.0, kUnitExp}};
  int built = 0;
  double worst_excess = -1e300;
  for (const auto& m : models) {
    for (int n : {10, 50, 200}) {
      const double d = default_resolvent_step(m);
      const CpApprox a = build_approx(m, n, d, 2.0);
      worst_excess = std::max(worst_excess, a.R_pi.maxCoeff() - (1.0 / m.c + 10.0 * d));
      ++built;
    }
  }
  r.require(worst_excess <= 0.0, std::to_string(built) + " approximations, max(sup R_pi - 1/c - 10 delta) = " + g(worst_excess));
  return r;
}

// 5 ------------------------------------------------------------------------------------------
Result cir_laplace() {
  Result r;
  const LevyModel m{0.0, 0.5, ZeroJumps{}};
  const VolterraSolution sol = solve_V(m, scale_table(m, 1e-3, 1.0), parse_boundary_measure("delta:0:1"), 1.0);
  const double fv = interpolate(sol.FV, sol.step, 1.0);
  r.require(std::abs(fv - 1.0 / 3.0) <= 1e-6, "F(V)(1)=" + fmt12(fv) + " err " + g(std::abs(fv - 1.0 / 3.0)));

  EnsembleRequest req;
  req.scheme = Scheme::Cir;
  req.model = m;
  req.zeta = 1.0;
  req.paths = 100000;
  req.grid = PathGrid{0.01, 1.0};
  req.seed = 5;
  req.threads = 0;
  const MeanSe est = empirical_laplace(simulate_ensemble(req), parse_boundary_measure("delta:0:1"), 1.0);
  const double target = std::exp(-1.0 / 3.0);
  r.require(std::abs(est.mean - target) <= 3.0 * est.se,
            "MC " + fmt12(est.mean) + " +- " + g(est.se) + " vs " + fmt12(target) + " (z=" + g(z_score(est.mean, est.se, target)) + ")");
  return r;
}

// 6 ------------------------------------------------------------------------------------------
Result cmj_mean() {
  Result r;
  const LevyModel m{1.0, 1.0, kUnitExp};
  const double zeta = 1.0;
  const ScaleTable table = scale_table(m, 1e-3, 2.0);
  auto pred = [&](double x) { return zeta * (1.0 - m.b * interpolate(table.W, table.step, x)); };
  const double xs[] = {0.5, 1.0, 2.0};

  auto run = [&](int n, long paths, std::uint64_t seed) {
    EnsembleRequest req;
    req.scheme = Scheme::Cmj;
    req.model = m;
    req.zeta = zeta;
    req.n = n;
    req.paths = paths;
    req.grid = PathGrid{0.05, 2.0};
    req.seed = seed;
    req.threads = 0;
    return simulate_ensemble(req);
  };
  const PathEnsemble e200 = run(200, 10000, 6);
  const PathEnsemble e400 = run(400, 2000, 7);

  // Exact mean of each approximation, from the renewal formula on a fine resolvent grid.
  const double fine_delta = m.c / 200.0;
  const CpApprox a200 = build_approx(m, 200, fine_delta, 2.0), a400 = build_approx(m, 400, fine_delta, 2.0);

  for (double x : xs) {
    const MeanSe s200 = column_stats(e200, x), s400 = column_stats(e400, x);
    const double p = pred(x);
    const double err200 = std::abs(s200.mean - p), err400 = std::abs(s400.mean - p);
    r.require(err200 <= std::max(3.0 * s200.se, 0.02 * zeta),
              "x=" + g(x) + " n=200 mean " + fmt12(s200.mean) + " +- " + g(s200.se) + " pred " + fmt12(p));
    const double combined = std::sqrt(s200.se * s200.se + s400.se * s400.se);
    r.require(err400 <= err200 + 3.0 * combined, "n=400 |err| " + g(err400) + " vs n=200 " + g(err200) + " + 3 SE " + g(3.0 * combined));
    const double bias200 = std::abs(expected_population(a200, ancestor_count(200, zeta), 200.0 * x) / 200.0 - p);
    const double bias400 = std::abs(expected_population(a400, ancestor_count(400, zeta), 400.0 * x) / 400.0 - p);
    r.require(bias400 <= bias200, "exact-mean bias " + g(bias200) + " -> " + g(bias400));
  }
  return r;
}

// 7 ------------------------------------------------------------------------------------------
Result comparison() {
  Result r;
  const LevyModel base{0.0, 1.0, kUnitExp};
  const PathGrid grid{0.01, 3.0};
  const CoupledEnsemble ens = simulate_coupled_ensemble(base, 1.0, 1.0, 0.0, 1.0, 100, grid, 1000, 8, 0);
  const long violations = check_comparison(ens.first, ens.second);
  r.require(violations == 0, std::to_string(violations) + " violations over " + std::to_string(ens.first.size()) + " coupled paths x " +
                                 std::to_string(grid.size()) + " points");

  // Negative control, reported only: the same marginals drawn independently.
  EnsembleRequest req;
  req.model = LevyModel{1.0, 1.0, kUnitExp};
  req.n = 100;
  req.paths = 1000;
  req.grid = grid;
  req.seed = 81;
  req.threads = 0;
  const PathEnsemble lo = simulate_ensemble(req);
  req.model = base;
  req.seed = 82;
  r.add("uncoupled control: " + std::to_string(check_comparison(lo, simulate_ensemble(req))) + " violations");
  return r;
}

// 8 ------------------------------------------------------------------------------------------
Result cross_scheme() {
  Result r;
  const LevyModel m{0.5, 1.0, kUnitExp};
  const auto mu = parse_boundary_measure("delta:0:0.5");
  const double x = 1.0, bias = 0.02;
  const VolterraSolution sol = solve_V(m, scale_table(m, 1e-3, x), mu, x);
  const double pred = laplace_prediction(1.0, sol, x);

  EnsembleRequest req;
  req.model = m;
  req.zeta = 1.0;
  req.paths = 20000;
  req.grid = PathGrid{0.01, x};
  req.threads = 0;
  req.scheme = Scheme::Euler;
  req.step = 1e-3;
  req.seed = 11;
  const MeanSe euler = empirical_laplace(simulate_ensemble(req), mu, x);
  req.scheme = Scheme::Cmj;
  req.n = 200;
  req.seed = 12;
  const MeanSe cmj = empirical_laplace(simulate_ensemble(req), mu, x);

  const double se_pair = std::sqrt(euler.se * euler.se + cmj.se * cmj.se);
  r.add("prediction " + fmt12(pred) + ", euler " + fmt12(euler.mean) + " +- " + g(euler.se) + ", cmj " + fmt12(cmj.mean) + " +- " +
        g(cmj.se));
  r.require(std::abs(euler.mean - cmj.mean) <= 3.0 * se_pair + bias, "euler vs cmj |diff| " + g(std::abs(euler.mean - cmj.mean)));
  r.require(std::abs(euler.mean - pred) <= 3.0 * euler.se + bias, "euler vs prediction " + g(std::abs(euler.mean - pred)));
  r.require(std::abs(cmj.mean - pred) <= 3.0 * cmj.se + bias, "cmj vs prediction " + g(std::abs(cmj.mean - pred)));
  return r;
}

// 9 ------------------------------------------------------------------------------------------
Result solver_bounds() {
  Result r;
  const LevyModel models[] = {LevyModel{0.0, 0.5, ZeroJumps{}}, LevyModel{1.0, 1.0, ZeroJumps{}}, LevyModel{0.5, 1.0, kUnitExp},
                              LevyModel{0.3, 0.8, AtomicJumps{{{1.0, 0.5}, {0.5, 2.0}}}},
                              LevyModel{0.2, 1.0, TemperedPowerJumps{0.5, 1.2, 1.0}}};
  const char* measures[] = {"delta:0:1", "delta:0:0.5", "delta:0:1,density:0:2:0.3,delta:3:0.2", "delta:1:2",
                            "density:0.5:1.5:1"};
  const double step = 1e-3, horizon = 4.0;
  int solves = 0, windows = 0, checked = 0, band_bad = 0, decay_bad = 0;
  double worst_ratio = 0.0;
  for (const auto& m : models) {
    const ScaleTable table = scale_table(m, step, horizon);
    for (const char* text : measures) {
      const BoundaryMeasure mu = parse_boundary_measure(text);
      const VolterraSolution s = solve_V(m, table, mu, horizon);
      ++solves;
      for (Index i = 0; i < s.V.size(); ++i) {
        const double t = static_cast<double>(i) * step;
        if (s.V[i] < 0.0 || s.V[i] > mu.mass_up_to(t) / m.c + 10.0 * step) ++band_bad;
      }
      for (const auto& h : s.residual_history) {
        ++windows;
        if (h.size() < 5) continue;
        ++checked;
        for (std::size_t k = h.size() - 4; k < h.size(); ++k) {
          const double ratio = h[k] / h[k - 1];
          worst_ratio = std::max(worst_ratio, ratio);
          if (!(ratio < 0.5)) ++decay_bad;
        }
      }
    }
  }
  r.require(band_bad == 0, std::to_string(band_bad) + " grid points outside 0 <= V <= mu([0,t])/c + 10 step over " +
                               std::to_string(solves) + " solves");
  r.require(decay_bad == 0 && checked > 0, std::to_string(checked) + "/" + std::to_string(windows) +
                                               " windows with >= 5 sweeps, worst final-5 contraction ratio " + g(worst_ratio));
  return r;
}

// 10 -----------------------------------------------------------------------------------------
std::string run_to_string(const Invocation& inv) {
  std::ostringstream out, err;
  const int code = run(inv, out, err);
  return std::to_string(code) + "\n" + out.str();
}

Result properties() {
  Result r;
  const LevyModel brownian{0.0, 1.0, ZeroJumps{}};
  const ScaleTable table = scale_table(brownian, 1e-3, 3.0);
  EnsembleRequest req;
  req.scheme = Scheme::Cir;
  req.model = brownian;
  req.zeta = 1.0;
  req.paths = 10000;
  req.grid = PathGrid{0.01, 3.0};
  req.seed = 13;
  req.threads = 0;
  const PathEnsemble cir = simulate_ensemble(req);
  for (double p : {2.0, 4.0}) {
    const VerificationReport rep = estimate_moment(cir, table, p);
    std::string lo, hi;
    for (const auto& [k, v] : rep.metadata) {
      if (k == "ratio_min") lo = v;
      if (k == "ratio_max") hi = v;
    }
    r.require(rep.pass, "moment p=" + g(p) + " ratio in [" + lo + ", " + hi + "]");
  }

  req.grid = PathGrid{0.005, 3.0};
  req.paths = 2000;
  const HolderStudy h = holder_refinement(simulate_ensemble(req), 0.4);
  r.require(h.pass, "Hoelder k=0.4 mean " + g(h.fine.mean) + " vs " + g(h.coarse.mean) + ", 2nd moment " + g(h.fine_second_moment) +
                        " vs " + g(h.coarse_second_moment));

  // Same command and seed, different worker counts: identical bytes.
  const std::string cfg = (std::filesystem::temp_directory_path() / "levylt_acceptance.ini").string();
  std::ofstream(cfg) << "[model]\nfamily = exponential\nrate = 1\nmean = 1\nb = 0.5\nc = 1\n";
  bool same = true;
  for (const char* scheme : {"cmj", "euler"}) {
    Invocation inv{"simulate", "", cfg,
                   {{"run.scheme", scheme}, {"numeric.paths", "200"}, {"numeric.xmax", "1"}, {"numeric.seed", "21"},
                    {"numeric.threads", "1"}},
                   "", ""};
    const std::string one = run_to_string(inv);
    inv.overrides.back().second = "4";
    same = same && one == run_to_string(inv) && one.rfind("0\n", 0) == 0;
  }
  Invocation verify{"verify", "mean", cfg, {{"numeric.paths", "300"}, {"numeric.xmax", "1"}, {"numeric.seed", "22"}}, "", ""};
  same = same && run_to_string(verify) == run_to_string(verify);
  r.require(same, "byte-identical outputs across runs and worker counts");

  req.scheme = Scheme::Cmj;
  req.model = LevyModel{0.5, 1.0, kUnitExp};
  req.n = 100;
  req.paths = 2000;
  req.grid = PathGrid{0.02, 2.0};
  const PathEnsemble ens = simulate_ensemble(req);
  PathEnsemble shuffled = ens;
  std::mt19937_64 gen(14);
  std::shuffle(shuffled.paths.begin(), shuffled.paths.end(), gen);
  const ScaleTable t2 = scale_table(req.model, 1e-3, 2.0);
  const VerificationReport a = estimate_mean_curve(ens, req.model, t2), b = estimate_mean_curve(shuffled, req.model, t2);
  bool invariant = a.points.size() == b.points.size();
  for (std::size_t i = 0; invariant && i < a.points.size(); ++i) {
    invariant = a.points[i].estimate == b.points[i].estimate && a.points[i].se == b.points[i].se && a.points[i].z == b.points[i].z;
  }
  r.require(invariant, "mean curve unchanged under path permutation");
  return r;
}

struct Criterion {
  const char* title;
  Result (*run)();
};

const Criterion kCriteria[] = {
    {"scale function, Brownian closed form", brownian_scale},
    {"identity residuals", identity_residuals},
    {"Laplace transform crosscheck", laplace_crosscheck_all},
    {"resolvent closed form and bound", resolvent},
    {"CIR Laplace functional", cir_laplace},
    {"mean identity, CMJ route", cmj_mean},
    {"comparison principle", comparison},
    {"cross-scheme consistency", cross_scheme},
    {"nonlinear solver bound and contraction", solver_bounds},
    {"property suite", properties},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) {
    for (int i = 1; i <= 10; ++i) which.push_back(i);
  }
  bool all = true;
  for (int id : which) {
    if (id < 1 || id > 10) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    const Criterion& c = kCriteria[id - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Result res;
    try {
      res = c.run();
    } catch (const std::exception& e) {
      res.pass = false;
      res.add(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s [%d] %s: %s (%.1f s)\n", res.pass ? "PASS" : "FAIL", id, c.title, res.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && res.pass;
  }
  return all ? 0 : 1;
}
