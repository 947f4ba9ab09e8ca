#include "levylt/verify.hpp"

#include "levylt/cp_approx.hpp"
#include "levylt/error.hpp"
#include "levylt/grid.hpp"
#include "levylt/parallel.hpp"
#include "levylt/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace levylt {

using Eigen::Index;
using Eigen::VectorXd;

double compensated_sum(const std::vector<double>& values) {
  double sum = 0.0, carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

MeanSe mean_and_se(std::vector<double> values) {
  if (values.empty()) throw UsageError("mean_and_se: empty sample");
  std::sort(values.begin(), values.end());
  MeanSe out;
  out.count = static_cast<long>(values.size());
  const double n = static_cast<double>(values.size());
  out.mean = compensated_sum(values) / n;
  if (values.size() < 2) return out;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - out.mean) * (values[i] - out.mean);
  out.se = std::sqrt(compensated_sum(sq) / (n - 1.0) / n);
  return out;
}

double z_score(double estimate, double se, double prediction) {
  const double diff = estimate - prediction;
  if (se > 0.0) return diff / se;
  if (diff == 0.0) return 0.0;
  return diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

PointCheck make_point(double x, double estimate, double se, double prediction, double bias_budget) {
  PointCheck p;
  p.x = x;
  p.estimate = estimate;
  p.se = se;
  p.prediction = prediction;
  p.bias_budget = bias_budget;
  p.z = z_score(estimate, se, prediction);
  p.pass = std::abs(estimate - prediction) <= 3.0 * se + bias_budget;
  return p;
}

namespace {

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void require_nonempty(const PathEnsemble& ens, const char* who) {
  if (ens.paths.empty()) throw UsageError(std::string(who) + ": empty ensemble");
}

}  // namespace

VerificationReport estimate_mean_curve(const PathEnsemble& ens, const LevyModel& model, const ScaleTable& table,
                                       double bias_budget) {
  require_nonempty(ens, "estimate_mean_curve");
  if (table.horizon < ens.grid.x_max * (1.0 - 1e-12)) throw DomainError("estimate_mean_curve: table horizon too short");
  VerificationReport r;
  r.quantity = "mean";
  r.rule = "|mean - zeta*(1-b*W(x))| <= 3*SE + bias_budget at >= 95% of grid points";
  long good = 0;
  for (Index i = 0; i < ens.grid.size(); ++i) {
    const double x = ens.grid.x(i);
    const MeanSe m = mean_and_se(to_std(ens.column(i)));
    const double pred = ens.zeta * (1.0 - model.b * interpolate(table.W, table.step, x));
    r.points.push_back(make_point(x, m.mean, m.se, pred, bias_budget));
    good += r.points.back().pass;
  }
  r.pass = static_cast<double>(good) >= 0.95 * static_cast<double>(r.points.size());
  r.note("scheme", to_string(ens.scheme));
  r.note("paths", std::to_string(ens.size()));
  r.note("n", std::to_string(ens.n));
  r.note("seed", std::to_string(ens.master_seed));
  r.note("points_within_band", std::to_string(good) + "/" + std::to_string(r.points.size()));
  return r;
}

double path_functional(const LocalTimePath& path, const BoundaryMeasure& mu, double x) {
  const double dx = path.grid.dx;
  double s = 0.0;
  for (const auto& a : mu.atoms) s += a.mass * interpolate(path.values, dx, x - a.location);
  if (!mu.density.empty()) {
    // ∫_0^x X(u)·density(x - u) du on the path grid.
    const Index m = steps_in(x, dx);
    for (Index j = 0; j <= m; ++j) {
      const double w = (j == 0 || j == m) ? 0.5 : 1.0;
      const double u = static_cast<double>(j) * dx;
      s += w * dx * path.values[j] * mu.density_at(std::max(0.0, x - u));
    }
  }
  return std::exp(-s);
}

MeanSe empirical_laplace(const PathEnsemble& ens, const BoundaryMeasure& mu, double x) {
  require_nonempty(ens, "empirical_laplace");
  if (mu.last_support() > x + 1e-12) throw DomainError("empirical_laplace: μ must be supported in [0, x]");
  (void)ens.grid.index_of(x);
  std::vector<double> v(ens.size());
  for (std::size_t p = 0; p < ens.size(); ++p) v[p] = path_functional(ens.paths[p], mu, x);
  return mean_and_se(std::move(v));
}

VerificationReport verify_laplace(const LaplaceRequest& q) {
  require_valid(q.model);
  if (!(q.zeta >= 0.0)) throw DomainError("verify_laplace: ζ must be non-negative");
  const ScaleTable table = scale_table(q.model, q.step, q.x + q.step);
  const VolterraSolution sol = solve_V(q.model, table, q.mu, q.x);
  const double pred = laplace_prediction(q.zeta, sol, q.x, q.u0);

  EnsembleRequest er;
  er.scheme = q.scheme;
  er.model = q.model;
  er.zeta = q.zeta;
  er.n = q.n;
  er.step = q.step;
  er.paths = q.paths;
  er.grid = PathGrid{q.dx, q.x};
  er.seed = q.seed;
  er.threads = q.threads;
  if (q.u0) {
    const double u0 = *q.u0;
    er.zeta_draw = [u0](Rng& rng) { return exponential(rng, u0); };
  }
  const PathEnsemble ens = simulate_ensemble(er);
  const MeanSe est = empirical_laplace(ens, q.mu, q.x);

  VerificationReport r;
  r.quantity = q.u0 ? "laplace_total" : "laplace";
  r.rule = "|estimate - prediction| <= 3*SE + bias_budget";
  r.points.push_back(make_point(q.x, est.mean, est.se, pred, q.bias_budget));
  r.pass = r.points.back().pass;
  r.note("scheme", to_string(q.scheme));
  r.note("paths", std::to_string(q.paths));
  r.note("n", std::to_string(q.n));
  r.note("seed", std::to_string(q.seed));
  r.note("mu", to_string(q.mu));
  r.note("FV(x)", fmt12(interpolate(sol.FV, sol.step, q.x)));
  r.note("picard_sweeps", std::to_string(sol.iterations));
  if (q.u0) {
    r.note("u0", fmt12(*q.u0));
    r.note("u0_caveat", "u0 is itself a Monte-Carlo estimate; this compares two Monte-Carlo quantities");
  }
  return r;
}

MeanSe estimate_u0(const LevyModel& model, long paths, int n, std::uint64_t seed, unsigned threads) {
  require_valid(model);
  if (!(model.b > 0.0)) throw DomainError("estimate_u0: needs b > 0 (the total local time is infinite when b = 0)");
  if (paths < 1) throw DomainError("estimate_u0: need at least one path");
  const CpApprox a = build_approx(model, n, default_resolvent_step(model), 0.0);
  const double nd = n, c = model.c;

  // Walk of the approximating compound-Poisson process seen just after each jump: it moves by
  // J - E with J ~ Π_n and E ~ Exp(rate γ_n). Each return above 0 is one more passage through 0.
  const double drift = a.mean_lifetime - 1.0 / a.gamma;
  double second = 2.0 * c * c;
  if (a.theta > 0.0) {
    const double m1 = a.integrated_tail_eta / a.tail_eta;
    const double m2 = 2.0 * integrated_tail(a.jumps, 2, a.eta) / a.tail_eta;
    second += a.theta * (2.0 * c * nd * m1 + nd * nd * m2);
  }
  const double variance = second - a.mean_lifetime * a.mean_lifetime + 1.0 / (a.gamma * a.gamma);
  const double floor_level = -40.0 * variance / (2.0 * std::abs(drift));

  std::vector<double> samples(static_cast<std::size_t>(paths));
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    long visits = 1;
    double s = 0.0;
    std::uint64_t steps = 0;
    while (true) {
      s += sample_jump(a, rng) - exponential(rng, 1.0 / a.gamma);
      if (s > 0.0) {
        ++visits;
        s = 0.0;
      } else if (s < floor_level) {
        break;
      }
      if (++steps > 2'000'000'000ULL) throw RunawayError("estimate_u0: walk did not settle");
    }
    samples[i] = static_cast<double>(visits) / nd;
  });
  return mean_and_se(std::move(samples));
}

VerificationReport estimate_moment(const PathEnsemble& ens, const ScaleTable& table, double p) {
  require_nonempty(ens, "estimate_moment");
  if (!(p >= 1.0)) throw DomainError("estimate_moment: p must be >= 1");
  if (table.horizon < ens.grid.x_max * (1.0 - 1e-12)) throw DomainError("estimate_moment: table horizon too short");
  VerificationReport r;
  r.quantity = "moment";
  r.rule = "moment/envelope ratio finite and positive at every grid point";
  const double z = ens.zeta;
  const double zp = std::max(z, std::pow(z, p));
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool ok = true;
  for (Index i = 0; i < ens.grid.size(); ++i) {
    const double x = ens.grid.x(i);
    VectorXd col = ens.column(i);
    std::vector<double> v(static_cast<std::size_t>(col.size()));
    for (Index k = 0; k < col.size(); ++k) v[static_cast<std::size_t>(k)] = std::pow(std::max(col[k], 0.0), p);
    const MeanSe m = mean_and_se(std::move(v));
    const double envelope = zp * std::pow(1.0 + interpolate(table.W, table.step, x), 2.0 * p - 2.0);
    PointCheck pc;
    pc.x = x;
    pc.estimate = m.mean;
    pc.se = m.se;
    pc.prediction = envelope;
    pc.z = z_score(m.mean, m.se, envelope);
    if (z == 0.0) {
      pc.pass = m.mean == 0.0;
    } else {
      const double ratio = m.mean / envelope;
      pc.pass = std::isfinite(ratio) && ratio > 0.0;
      if (pc.pass) {
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
    }
    ok = ok && pc.pass;
    r.points.push_back(pc);
  }
  r.pass = ok;
  r.note("p", fmt12(p));
  r.note("paths", std::to_string(ens.size()));
  r.note("ratio_min", fmt12(z == 0.0 ? 0.0 : lo));
  r.note("ratio_max", fmt12(hi));
  return r;
}

double holder_coefficient(const VectorXd& f, double dx, double kappa) {
  // The endpoint 1/2 is admitted so smooth reference paths can be checked at the critical index.
  if (!(kappa > 0.0 && kappa <= 0.5)) throw DomainError("holder_coefficient: κ must lie in (0, 1/2]");
  const Index last = f.size() - 1;
  if (last < 1) return 0.0;
  double best = 0.0;
  auto span = [&](Index s) {
    const double scale = std::pow(static_cast<double>(s) * dx, -kappa);
    for (Index i = 0; i + s <= last; ++i) best = std::max(best, std::abs(f[i + s] - f[i]) * scale);
  };
  for (Index s = 1; s < last; s *= 2) span(s);
  span(last);
  return best;
}

double holder_coefficient(const LocalTimePath& path, double kappa) {
  return holder_coefficient(path.values, path.grid.dx, kappa);
}

HolderStudy holder_refinement(const PathEnsemble& fine, double kappa) {
  require_nonempty(fine, "holder_refinement");
  std::vector<double> f(fine.size()), g(fine.size()), f2(fine.size()), g2(fine.size());
  for (std::size_t p = 0; p < fine.size(); ++p) {
    const auto& v = fine.paths[p].values;
    VectorXd coarse((v.size() + 1) / 2);
    for (Index i = 0; i < coarse.size(); ++i) coarse[i] = v[2 * i];
    f[p] = holder_coefficient(v, fine.grid.dx, kappa);
    g[p] = holder_coefficient(coarse, 2.0 * fine.grid.dx, kappa);
    f2[p] = f[p] * f[p];
    g2[p] = g[p] * g[p];
  }
  HolderStudy h;
  h.fine = mean_and_se(f);
  h.coarse = mean_and_se(g);
  h.fine_second_moment = mean_and_se(f2).mean;
  h.coarse_second_moment = mean_and_se(g2).mean;
  auto within = [](double a, double b) { return a > 0.0 && b > 0.0 && a <= 2.0 * b && b <= 2.0 * a; };
  h.pass = std::isfinite(h.fine.mean) && within(h.fine.mean, h.coarse.mean) &&
           within(h.fine_second_moment, h.coarse_second_moment);
  return h;
}

long check_comparison(const PathEnsemble& first, const PathEnsemble& second) {
  if (first.size() != second.size() || first.grid.size() != second.grid.size() || first.grid.dx != second.grid.dx)
    throw UsageError("check_comparison: ensembles differ in size or grid");
  long violations = 0;
  for (std::size_t p = 0; p < first.size(); ++p) {
    const auto& a = first.paths[p].values;
    const auto& b = second.paths[p].values;
    for (Index i = 0; i < a.size(); ++i) violations += a[i] > b[i];
  }
  return violations;
}

}  // namespace levylt
