#include "levylt/cp_approx.hpp"

#include "levylt/error.hpp"
#include "levylt/grid.hpp"
#include "levylt/volterra.hpp"

#include <cmath>

namespace levylt {

using Eigen::Index;
using Eigen::VectorXd;

namespace {

double truncation_level(const JumpMeasure& jumps, double target) {
  double lo = 0.0, hi = 1.0;
  int grow = 0;
  while (tail(jumps, hi) >= target) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 200) throw UnsupportedError("build_approx: cannot bracket the truncation level");
  }
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    (tail(jumps, mid) >= target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

CpApprox build_approx(const LevyModel& model, int n, double delta, double horizon) {
  require_valid(model);
  if (n < 1) throw DomainError("build_approx: n must be >= 1");
  if (!(horizon >= 0.0)) throw DomainError("build_approx: horizon must be non-negative");
  const double c = model.c, nd = static_cast<double>(n);

  CpApprox a;
  a.n = n;
  a.b = model.b;
  a.c = c;
  a.jumps = model.jumps;
  a.model_fingerprint = fingerprint(model);

  if (!has_jumps(model.jumps)) {
    a.eta = 0.0;
    a.theta = 0.0;
  } else if (finite_activity(model.jumps)) {
    a.eta = 0.0;
    a.theta = c * tail_at_zero(model.jumps) / (nd * nd);
  } else {
    a.theta = std::pow(nd, -1.5);
    a.eta = truncation_level(model.jumps, std::sqrt(nd) / c);
  }
  if (a.theta >= 1.0)
    throw ParameterError("build_approx: theta_n = " + std::to_string(a.theta) + " >= 1, n is too small for this jump measure");

  a.tail_eta = has_jumps(model.jumps) ? (a.eta > 0.0 ? tail(model.jumps, a.eta) : tail_at_zero(model.jumps)) : 0.0;
  a.integrated_tail_eta = has_jumps(model.jumps) ? integrated_tail(model.jumps, 1, a.eta) : 0.0;
  const double excess = a.integrated_tail_eta / nd;
  const double cg = 1.0 - model.b / nd - excess;
  if (!(cg > 0.0)) throw ParameterError("build_approx: gamma_n is not positive, n is too small for this drift");
  a.gamma = cg / c;
  a.p = 1.0 / (1.0 + excess);
  a.mean_lifetime = c * (1.0 + excess);

  if (horizon <= 0.0) return a;
  if (!(delta > 0.0)) throw DomainError("build_approx: resolvent step must be positive");
  const Index m = steps_in(nd * horizon, delta);
  a.delta = delta;
  a.horizon_fast = static_cast<double>(m) * delta;

  // Π̄_n(x) = e^{-x/c} + n^{-2}·q(x), q(x) = ∫_0^x e^{-(x-u)/c} ν̄(η + u/n) du, by an exponential
  // integrator with ν̄ linear between nodes.
  a.Pi_bar.resize(m + 1);
  const double decay = std::exp(-delta / c);
  // ∫_0^δ e^{-(δ-s)/c} ds and ∫_0^δ e^{-(δ-s)/c} s/δ ds
  const double w_int = c * (1.0 - decay);
  const double w_lin = c - c * c * (1.0 - decay) / delta;
  double q = 0.0;
  double prev = a.tail_eta;
  a.Pi_bar[0] = 1.0;
  for (Index i = 1; i <= m; ++i) {
    const double x = static_cast<double>(i) * delta;
    const double cur = has_jumps(model.jumps) ? tail(model.jumps, a.eta + x / nd) : 0.0;
    q = decay * q + prev * (w_int - w_lin) + cur * w_lin;
    prev = cur;
    a.Pi_bar[i] = std::exp(-x / c) + q / (nd * nd);
  }

  a.R_pi = linear_resolvent(a.gamma * a.Pi_bar, delta);
  a.R_pi_integral = cumulative_trapezoid(a.R_pi, delta);
  a.survival = (VectorXd::Ones(m + 1) - cumulative_trapezoid(a.Pi_bar, delta) / a.mean_lifetime).cwiseMax(0.0);
  return a;
}

double resolvent_R2(const CpApprox& a, double t, double y) {
  if (!a.has_resolvent()) throw UsageError("resolvent_R2: approximation built without a resolvent grid");
  if (!(t >= 0.0) || t > a.horizon_fast + 1e-9 * a.delta) throw DomainError("resolvent_R2: t outside the resolvent grid");
  if (!(y > 0.0)) throw DomainError("resolvent_R2: y must be positive");
  const double lo = std::max(0.0, t - y);
  return (y > t ? 1.0 : 0.0) + interpolate(a.R_pi_integral, a.delta, t) - interpolate(a.R_pi_integral, a.delta, lo);
}

double sample_jump(const CpApprox& a, Rng& rng) {
  const double e = exponential(rng, a.c);
  if (a.theta <= 0.0 || uniform01(rng) >= a.theta) return e;
  return e + static_cast<double>(a.n) * sample_conditional_jump(a.jumps, a.eta, rng);
}

double sample_ancestor_lifetime(const CpApprox& a, Rng& rng) {
  const double e = exponential(rng, a.c);
  if (a.p >= 1.0 || uniform01(rng) < a.p) return e;
  return e + static_cast<double>(a.n) * sample_integrated_tail_overshoot(a.jumps, a.eta, rng);
}

double expected_population(const CpApprox& a, double k, double t) {
  if (!a.has_resolvent()) throw UsageError("expected_population: approximation built without a resolvent grid");
  if (!(t >= 0.0) || t > a.horizon_fast + 1e-9 * a.delta)
    throw DomainError("expected_population: t outside the resolvent grid");
  // S(t) + ∫_0^t R_Π(t-s) S(s) ds on the grid, trapezoid at the node below t and linear in between.
  auto at_node = [&](Index i) {
    double conv = 0.0;
    if (i > 0) {
      conv = 0.5 * (a.R_pi[i] * a.survival[0] + a.R_pi[0] * a.survival[i]);
      if (i > 1) conv += a.R_pi.segment(1, i - 1).reverse().dot(a.survival.segment(1, i - 1));
      conv *= a.delta;
    }
    return a.survival[i] + conv;
  };
  const double pos = t / a.delta;
  const Index i = std::min<Index>(static_cast<Index>(pos), a.R_pi.size() - 1);
  const double w = pos - static_cast<double>(i);
  const double v = (w > 1e-12 && i + 1 < a.R_pi.size()) ? (1.0 - w) * at_node(i) + w * at_node(i + 1) : at_node(i);
  return k * v;
}

}  // namespace levylt
