#include "levylt/sim.hpp"

#include "levylt/error.hpp"
#include "levylt/grid.hpp"
#include "levylt/parallel.hpp"
#include "levylt/text.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

namespace levylt {

using Eigen::Index;
using Eigen::VectorXd;

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Cmj:
      return "cmj";
    case Scheme::Cir:
      return "cir";
    case Scheme::Euler:
      return "euler";
  }
  return "?";
}

Scheme parse_scheme(const std::string& text) {
  if (text == "cmj") return Scheme::Cmj;
  if (text == "cir") return Scheme::Cir;
  if (text == "euler") return Scheme::Euler;
  throw UsageError("unknown scheme '" + text + "' (expected cmj, cir or euler)");
}

Index PathGrid::size() const {
  if (!(dx > 0.0) || !(x_max >= 0.0)) throw DomainError("path grid: need dx > 0 and x_max >= 0");
  return steps_in(x_max, dx) + 1;
}

Index PathGrid::index_of(double x) const {
  const double pos = x / dx;
  const double r = std::round(pos);
  if (std::abs(pos - r) > 1e-6 || r < 0.0 || static_cast<Index>(r) >= size())
    throw UsageError("x = " + fmt12(x) + " is not a point of the path grid");
  return static_cast<Index>(r);
}

VectorXd PathEnsemble::column(Index i) const {
  VectorXd out(static_cast<Index>(paths.size()));
  for (std::size_t p = 0; p < paths.size(); ++p) out[static_cast<Index>(p)] = paths[p].values[i];
  return out;
}

long ancestor_count(int n, double zeta) {
  if (!(zeta >= 0.0)) throw DomainError("initial local time ζ must be non-negative");
  return static_cast<long>(std::floor(static_cast<double>(n) * zeta + 1e-9));
}

// ---------------------------------------------------------------------------------------------
// CMJ
//
// A lifetime is E + D with E ~ Exp(mean c) and D the optional heavy part. Running D first and E
// second gives the same population count, so individuals in their E phase form one pool dying at
// total rate pool/c, and only those still in their D phase need a priority queue.

namespace {

using MinHeap = std::priority_queue<double, std::vector<double>, std::greater<>>;

template <class Observer>
void run_cmj(const CpApprox& a, long k, double horizon, Rng& rng, const CmjOptions& options, Observer&& observe) {
  const double nd = static_cast<double>(a.n);
  long pool = 0;
  MinHeap delayed;
  for (long j = 0; j < k; ++j) {
    if (a.p >= 1.0 || uniform01(rng) < a.p)
      ++pool;
    else
      delayed.push(nd * sample_integrated_tail_overshoot(a.jumps, a.eta, rng));
  }
  long alive = k;
  double t = 0.0;
  std::uint64_t events = 0;
  const double inv_c = 1.0 / a.c;
  while (alive > 0) {
    const double birth_rate = a.gamma * static_cast<double>(alive);
    const double rate = birth_rate + static_cast<double>(pool) * inv_c;
    const double next = rate > 0.0 ? t + exponential(rng, 1.0 / rate) : std::numeric_limits<double>::infinity();
    if (!delayed.empty() && delayed.top() <= next) {
      t = delayed.top();
      delayed.pop();
      if (t > horizon) break;
      ++pool;
      continue;
    }
    if (next > horizon) break;
    t = next;
    if (uniform01(rng) * rate < birth_rate) {
      ++alive;
      if (a.theta > 0.0 && uniform01(rng) < a.theta)
        delayed.push(t + nd * sample_conditional_jump(a.jumps, a.eta, rng));
      else
        ++pool;
      observe(t, +1, alive);
    } else {
      --pool;
      --alive;
      observe(t, -1, alive);
    }
    if (++events > options.event_cap)
      throw RunawayError("CMJ simulation exceeded the event cap of " + std::to_string(options.event_cap));
  }
}

// Records Z(n·x_i)/n on a grid as events stream past.
struct GridRecorder {
  VectorXd values;
  std::vector<double> times;
  double scale;
  std::size_t next = 0;

  GridRecorder(const PathGrid& grid, int n) : values(grid.size()), scale(1.0 / n) {
    times.resize(static_cast<std::size_t>(values.size()));
    for (Index i = 0; i < values.size(); ++i) times[static_cast<std::size_t>(i)] = n * grid.x(i);
  }
  // `before` is the count just before an event at time t.
  void advance(double t, long before) {
    while (next < times.size() && times[next] < t) values[static_cast<Index>(next++)] = before * scale;
  }
  void finish(long final_count) {
    while (next < times.size()) values[static_cast<Index>(next++)] = final_count * scale;
  }
};

}  // namespace

long PopulationPath::value_at(double t) const {
  if (t > horizon * (1.0 + 1e-12)) throw DomainError("population path: t beyond the simulated horizon");
  auto it = std::upper_bound(events.begin(), events.end(), t,
                             [](double v, const PopulationEvent& e) { return v < e.time; });
  long z = initial;
  for (auto e = events.begin(); e != it; ++e) z += e->change;
  return z;
}

PopulationPath simulate_cmj(const CpApprox& approx, long k, double horizon_fast, Rng& rng, const CmjOptions& options) {
  if (k < 0) throw DomainError("simulate_cmj: ancestor count must be non-negative");
  if (!(horizon_fast >= 0.0)) throw DomainError("simulate_cmj: horizon must be non-negative");
  PopulationPath z;
  z.initial = k;
  z.horizon = horizon_fast;
  run_cmj(approx, k, horizon_fast, rng, options, [&](double t, int change, long) { z.events.push_back({t, change}); });
  return z;
}

LocalTimePath rescale_to_path(const PopulationPath& z, int n, const PathGrid& grid) {
  if (n < 1) throw DomainError("rescale_to_path: n must be >= 1");
  if (z.horizon < n * grid.x_max * (1.0 - 1e-12)) throw DomainError("rescale_to_path: population horizon shorter than n*x_max");
  LocalTimePath path;
  path.grid = grid;
  path.n = n;
  path.scheme = Scheme::Cmj;
  path.zeta = static_cast<double>(z.initial) / n;
  path.values.resize(grid.size());
  long count = z.initial;
  std::size_t e = 0;
  for (Index i = 0; i < path.values.size(); ++i) {
    const double t = n * grid.x(i);
    while (e < z.events.size() && z.events[e].time <= t) count += z.events[e++].change;
    path.values[i] = static_cast<double>(count) / n;
  }
  return path;
}

LocalTimePath simulate_cmj_path(const CpApprox& approx, double zeta, const PathGrid& grid, Rng& rng,
                                const CmjOptions& options) {
  const long k = ancestor_count(approx.n, zeta);
  GridRecorder rec(grid, approx.n);
  long last = k;
  run_cmj(approx, k, approx.n * grid.x_max, rng, options, [&](double t, int change, long after) {
    rec.advance(t, after - change);
    last = after;
  });
  rec.finish(last);
  LocalTimePath path;
  path.grid = grid;
  path.values = std::move(rec.values);
  path.zeta = zeta;
  path.scheme = Scheme::Cmj;
  path.n = approx.n;
  return path;
}

std::pair<LocalTimePath, LocalTimePath> simulate_coupled(const LevyModel& base, double b1, double zeta1, double b2,
                                                         double zeta2, int n, const PathGrid& grid, Rng& rng,
                                                         const CmjOptions& options) {
  if (!(b1 >= b2) || !(b2 >= 0.0)) throw ParameterError("simulate_coupled: need b1 >= b2 >= 0");
  if (!(zeta1 <= zeta2) || !(zeta1 >= 0.0)) throw ParameterError("simulate_coupled: need 0 <= zeta1 <= zeta2");
  LevyModel m1 = base, m2 = base;
  m1.b = b1;
  m2.b = b2;
  const CpApprox a1 = build_approx(m1, n, default_resolvent_step(m1), 0.0);
  const CpApprox a2 = build_approx(m2, n, default_resolvent_step(m2), 0.0);
  const double accept = a2.gamma > 0.0 ? a1.gamma / a2.gamma : 0.0;
  const long k1 = ancestor_count(n, zeta1), k2 = ancestor_count(n, zeta2);
  const double nd = n, inv_c = 1.0 / base.c, horizon = nd * grid.x_max;

  // Pools hold individuals in their exponential phase; pool1 counts those also in population 1.
  long pool1 = 0, pool2 = 0;
  using Entry = std::pair<double, bool>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> delayed;
  for (long j = 0; j < k2; ++j) {
    const bool in1 = j < k1;
    if (a2.p >= 1.0 || uniform01(rng) < a2.p)
      ++(in1 ? pool1 : pool2);
    else
      delayed.push({nd * sample_integrated_tail_overshoot(a2.jumps, a2.eta, rng), in1});
  }
  long alive1 = k1, alive2 = k2;
  GridRecorder rec1(grid, n), rec2(grid, n);
  double t = 0.0;
  std::uint64_t events = 0;
  while (alive2 > 0) {
    const double birth_rate = a2.gamma * static_cast<double>(alive2);
    const double rate = birth_rate + static_cast<double>(pool1 + pool2) * inv_c;
    const double next = rate > 0.0 ? t + exponential(rng, 1.0 / rate) : std::numeric_limits<double>::infinity();
    if (!delayed.empty() && delayed.top().first <= next) {
      const auto [when, in1] = delayed.top();
      delayed.pop();
      t = when;
      if (t > horizon) break;
      ++(in1 ? pool1 : pool2);
      continue;
    }
    if (next > horizon) break;
    t = next;
    rec1.advance(t, alive1);
    rec2.advance(t, alive2);
    if (uniform01(rng) * rate < birth_rate) {
      const bool parent_in1 = uniform01(rng) * static_cast<double>(alive2) < static_cast<double>(alive1);
      const bool child_in1 = parent_in1 && uniform01(rng) < accept;
      ++alive2;
      if (child_in1) ++alive1;
      if (a2.theta > 0.0 && uniform01(rng) < a2.theta)
        delayed.push({t + nd * sample_conditional_jump(a2.jumps, a2.eta, rng), child_in1});
      else
        ++(child_in1 ? pool1 : pool2);
    } else {
      const bool in1 = uniform01(rng) * static_cast<double>(pool1 + pool2) < static_cast<double>(pool1);
      --(in1 ? pool1 : pool2);
      --alive2;
      if (in1) --alive1;
    }
    if (++events > options.event_cap)
      throw RunawayError("coupled CMJ simulation exceeded the event cap of " + std::to_string(options.event_cap));
  }
  rec1.finish(alive1);
  rec2.finish(alive2);

  auto make = [&](VectorXd values, double zeta) {
    LocalTimePath p;
    p.grid = grid;
    p.values = std::move(values);
    p.zeta = zeta;
    p.scheme = Scheme::Cmj;
    p.n = n;
    return p;
  };
  return {make(std::move(rec1.values), zeta1), make(std::move(rec2.values), zeta2)};
}

// ---------------------------------------------------------------------------------------------
// CIR

LocalTimePath simulate_cir(const LevyModel& model, double zeta, const PathGrid& grid, Rng& rng) {
  require_valid(model);
  if (has_jumps(model.jumps)) throw UnsupportedError("simulate_cir: the exact diffusion scheme needs a model without jumps");
  if (!(zeta >= 0.0)) throw DomainError("simulate_cir: ζ must be non-negative");
  const double kappa = model.b / model.c, sigma2 = 2.0 / model.c, h = grid.dx;
  const double decay = std::exp(-kappa * h);
  const double scale = kappa > 0.0 ? sigma2 * (-std::expm1(-kappa * h)) / (4.0 * kappa) : sigma2 * h / 4.0;

  LocalTimePath path;
  path.grid = grid;
  path.zeta = zeta;
  path.scheme = Scheme::Cir;
  path.values.resize(grid.size());
  double x = zeta;
  path.values[0] = x;
  for (Index i = 1; i < path.values.size(); ++i) {
    if (x > 0.0) {
      const long count = std::poisson_distribution<long>(x * decay / (2.0 * scale))(rng);
      x = count > 0 ? std::gamma_distribution<double>(static_cast<double>(count), 2.0 * scale)(rng) : 0.0;
    }
    path.values[i] = x;
  }
  return path;
}

// ---------------------------------------------------------------------------------------------
// Euler

EulerKernels prepare_euler(const LevyModel& model, const ScaleTable& table, double x_max) {
  require_valid(model);
  if (!finite_activity(model.jumps))
    throw UnsupportedError("simulate_euler: the Euler scheme needs a finite-activity jump measure");
  if (table.model_fingerprint != fingerprint(model)) throw UsageError("simulate_euler: table built for a different model");
  if (table.horizon < x_max * (1.0 - 1e-12)) throw DomainError("simulate_euler: table horizon shorter than x_max");

  EulerKernels k;
  k.model = model;
  k.step = table.step;
  k.steps = std::min<Index>(table.size() - 1, steps_in(x_max, table.step) + 1);
  const Index n = k.steps;
  const double h = table.step;
  k.W = table.W.head(n + 1);
  k.Wp = table.Wp.head(n + 1);
  k.nu_bar0 = has_jumps(model.jumps) ? tail_at_zero(model.jumps) : 0.0;
  k.nu_bar2_0 = has_jumps(model.jumps) ? integrated_tail_at_zero(model.jumps) : 0.0;

  // K = W'∗ν̄ on the nodes, product trapezoid with ν̄ cell moments.
  VectorXd K = VectorXd::Zero(n + 1);
  if (has_jumps(model.jumps)) {
    VectorXd near(n), far(n);
    for (Index m = 0; m < n; ++m) {
      const auto mom = tail_cell_moments(model.jumps, 0, static_cast<double>(m) * h, h);
      near[m] = mom.mass - mom.first;
      far[m] = mom.first;
    }
    for (Index i = 1; i <= n; ++i)
      K[i] = near.head(i).dot(k.Wp.segment(1, i).reverse()) + far.head(i).dot(k.Wp.head(i).reverse());
  }
  k.Wp_mid.resize(n);
  k.K_mid.resize(n);
  for (Index j = 0; j < n; ++j) {
    k.Wp_mid[j] = interpolate(table.Wp, h, (static_cast<double>(j) + 0.5) * h);
    k.K_mid[j] = 0.5 * (K[j] + K[j + 1]);
  }
  return k;
}

LocalTimePath simulate_euler(const EulerKernels& k, double zeta, const PathGrid& grid, Rng& rng,
                             const EulerOptions& options) {
  if (!(zeta >= 0.0)) throw DomainError("simulate_euler: ζ must be non-negative");
  if (grid.x_max > static_cast<double>(k.steps) * k.step * (1.0 + 1e-12))
    throw DomainError("simulate_euler: kernels prepared for a shorter horizon");
  const double h = k.step, c = k.model.c;
  const Index n = k.steps;
  const bool noisy = !options.zero_noise;

  struct Jump {
    double at;
    double size;
  };
  std::vector<Jump> jumps;
  // Overshoots of the initial excursions.
  if (noisy && k.nu_bar2_0 > 0.0 && zeta > 0.0) {
    const long count = std::poisson_distribution<long>(zeta * k.nu_bar2_0)(rng);
    for (long j = 0; j < count; ++j) jumps.push_back({0.0, sample_integrated_tail_overshoot(k.model.jumps, 0.0, rng)});
  }

  VectorXd X(n + 1), gauss = VectorXd::Zero(n + 1), comp = VectorXd::Zero(n + 1);
  X[0] = zeta;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 1; i <= n; ++i) {
    const double xp = std::max(X[i - 1], 0.0);
    const double t = static_cast<double>(i) * h;
    if (noisy && xp > 0.0) {
      gauss[i] = std::sqrt(2.0 * c * h * xp) * normal(rng);
      if (k.nu_bar0 > 0.0) {
        const long count = std::poisson_distribution<long>(h * xp * k.nu_bar0)(rng);
        for (long j = 0; j < count; ++j) {
          const double s = t - h * uniform01(rng);
          jumps.push_back({s, sample_conditional_jump(k.model.jumps, 0.0, rng)});
        }
      }
    }
    comp[i] = -h * xp;
    // Σ_{j=1..i} (G_j W'_mid[i-j] + comp_j K_mid[i-j])
    double x = zeta * c * k.Wp[i];
    x += gauss.segment(1, i).dot(k.Wp_mid.head(i).reverse());
    if (k.nu_bar0 > 0.0) x += comp.segment(1, i).dot(k.K_mid.head(i).reverse());
    for (const auto& jmp : jumps)
      x += interpolate(k.W, h, t - jmp.at) - interpolate(k.W, h, t - jmp.at - jmp.size);
    X[i] = x;
  }

  LocalTimePath path;
  path.grid = grid;
  path.zeta = zeta;
  path.scheme = Scheme::Euler;
  path.values.resize(grid.size());
  for (Index i = 0; i < path.values.size(); ++i) path.values[i] = std::max(0.0, interpolate(X, h, grid.x(i)));
  return path;
}

LocalTimePath simulate_euler(const LevyModel& model, const ScaleTable& table, double zeta, const PathGrid& grid,
                             Rng& rng, const EulerOptions& options) {
  return simulate_euler(prepare_euler(model, table, grid.x_max), zeta, grid, rng, options);
}

// ---------------------------------------------------------------------------------------------
// Ensembles

PathEnsemble simulate_ensemble(const EnsembleRequest& r) {
  require_valid(r.model);
  if (r.paths < 1) throw DomainError("simulate_ensemble: need at least one path");
  if (!(r.zeta >= 0.0)) throw DomainError("simulate_ensemble: ζ must be non-negative");
  PathEnsemble ens;
  ens.grid = r.grid;
  ens.scheme = r.scheme;
  ens.master_seed = r.seed;
  ens.zeta = r.zeta;
  ens.model_fingerprint = fingerprint(r.model);
  ens.paths.resize(static_cast<std::size_t>(r.paths));
  (void)r.grid.size();

  std::function<LocalTimePath(Rng&, double)> one;
  CpApprox approx;
  EulerKernels kernels;
  switch (r.scheme) {
    case Scheme::Cmj:
      ens.n = r.n;
      approx = build_approx(r.model, r.n, default_resolvent_step(r.model), 0.0);
      one = [&](Rng& rng, double zeta) { return simulate_cmj_path(approx, zeta, r.grid, rng, r.cmj); };
      break;
    case Scheme::Cir:
      if (has_jumps(r.model.jumps)) throw UnsupportedError("simulate: the cir scheme needs a model without jumps");
      one = [&](Rng& rng, double zeta) { return simulate_cir(r.model, zeta, r.grid, rng); };
      break;
    case Scheme::Euler: {
      const ScaleTable table = scale_table(r.model, r.step, std::max(r.grid.x_max, r.step) + r.step);
      kernels = prepare_euler(r.model, table, r.grid.x_max);
      one = [&](Rng& rng, double zeta) { return simulate_euler(kernels, zeta, r.grid, rng); };
      break;
    }
  }
  parallel_for(ens.paths.size(), r.threads, [&](std::size_t i) {
    const std::uint64_t seed = stream_seed(r.seed, i);
    Rng rng(seed);
    const double zeta = r.zeta_draw ? r.zeta_draw(rng) : r.zeta;
    LocalTimePath p = one(rng, zeta);
    p.seed = seed;
    ens.paths[i] = std::move(p);
  });
  return ens;
}

CoupledEnsemble simulate_coupled_ensemble(const LevyModel& base, double b1, double zeta1, double b2, double zeta2,
                                          int n, const PathGrid& grid, long paths, std::uint64_t seed,
                                          unsigned threads) {
  if (paths < 1) throw DomainError("simulate_coupled: need at least one path");
  CoupledEnsemble out;
  for (auto* e : {&out.first, &out.second}) {
    e->grid = grid;
    e->scheme = Scheme::Cmj;
    e->master_seed = seed;
    e->n = n;
    e->paths.resize(static_cast<std::size_t>(paths));
  }
  LevyModel m1 = base, m2 = base;
  m1.b = b1;
  m2.b = b2;
  out.first.zeta = zeta1;
  out.second.zeta = zeta2;
  out.first.model_fingerprint = fingerprint(m1);
  out.second.model_fingerprint = fingerprint(m2);
  parallel_for(static_cast<std::size_t>(paths), threads, [&](std::size_t i) {
    const std::uint64_t s = stream_seed(seed, i);
    Rng rng(s);
    auto [p1, p2] = simulate_coupled(base, b1, zeta1, b2, zeta2, n, grid, rng);
    p1.seed = p2.seed = s;
    out.first.paths[i] = std::move(p1);
    out.second.paths[i] = std::move(p2);
  });
  return out;
}

}  // namespace levylt
