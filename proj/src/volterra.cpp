#include "levylt/volterra.hpp"

#include "levylt/error.hpp"
#include "levylt/grid.hpp"
#include "levylt/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace levylt {

using Eigen::Index;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------------------------
// Boundary measure

bool BoundaryMeasure::empty() const { return atoms.empty() && density.empty(); }

double BoundaryMeasure::mass_up_to(double t) const {
  double m = 0.0;
  for (const auto& a : atoms)
    if (a.location <= t) m += a.mass;
  for (const auto& d : density) m += d.value * std::max(0.0, std::min(t, d.to) - d.from);
  return m;
}

double BoundaryMeasure::density_at(double s) const {
  double v = 0.0;
  for (const auto& d : density)
    if (s >= d.from && s < d.to) v += d.value;
  return v;
}

double BoundaryMeasure::first_support() const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& a : atoms) s = std::min(s, a.location);
  for (const auto& d : density)
    if (d.value > 0.0) s = std::min(s, d.from);
  return s;
}

double BoundaryMeasure::last_support() const {
  double s = 0.0;
  for (const auto& a : atoms) s = std::max(s, a.location);
  for (const auto& d : density)
    if (d.value > 0.0) s = std::max(s, d.to);
  return s;
}

BoundaryMeasure parse_boundary_measure(std::string_view text) {
  BoundaryMeasure mu;
  const std::string whole = trim(text);
  if (whole.empty() || whole == "zero") return mu;
  for (const auto& item : split(whole, ',')) {
    const auto parts = split(item, ':');
    const std::string ctx = "boundary measure item '" + item + "'";
    if (parts.size() == 3 && parts[0] == "delta") {
      const double s = parse_number(parts[1], ctx), m = parse_number(parts[2], ctx);
      if (!(s >= 0.0) || !(m > 0.0) || !std::isfinite(s) || !std::isfinite(m))
        throw DomainError(ctx + ": need location >= 0 and mass > 0");
      mu.atoms.push_back({s, m});
    } else if (parts.size() == 4 && parts[0] == "density") {
      const double a = parse_number(parts[1], ctx), b = parse_number(parts[2], ctx), v = parse_number(parts[3], ctx);
      if (!(a >= 0.0) || !(b > a) || !(v >= 0.0) || !std::isfinite(b) || !std::isfinite(v))
        throw DomainError(ctx + ": need 0 <= from < to and value >= 0");
      mu.density.push_back({a, b, v});
    } else {
      throw UsageError(ctx + ": expected delta:<s>:<mass> or density:<from>:<to>:<value>");
    }
  }
  std::sort(mu.atoms.begin(), mu.atoms.end(),
            [](const DiracMass& x, const DiracMass& y) { return x.location < y.location; });
  return mu;
}

std::string to_string(const BoundaryMeasure& mu) {
  if (mu.empty()) return "zero";
  std::string out;
  auto add = [&](const std::string& s) { out += (out.empty() ? "" : ",") + s; };
  for (const auto& a : mu.atoms) add("delta:" + fmt17(a.location) + ":" + fmt17(a.mass));
  for (const auto& d : mu.density) add("density:" + fmt17(d.from) + ":" + fmt17(d.to) + ":" + fmt17(d.value));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Linear resolvent

VectorXd linear_resolvent(const VectorXd& g, double step) {
  if (!(step > 0.0)) throw DomainError("linear_resolvent: step must be positive");
  const Index n = g.size();
  VectorXd R = VectorXd::Zero(n);
  if (n == 0) return R;
  const double diag = 1.0 - 0.5 * step * g[0];
  if (!(diag > 0.0)) throw DomainError("linear_resolvent: step too large, 1 - step*g(0)/2 <= 0");
  R[0] = g[0];
  for (Index i = 1; i < n; ++i) {
    // R_i = g_i + step·[g_i R_0/2 + Σ_{0<j<i} g_{i-j} R_j + g_0 R_i/2]
    double conv = 0.5 * g[i] * R[0];
    if (i > 1) conv += g.segment(1, i - 1).reverse().dot(R.segment(1, i - 1));
    R[i] = (g[i] + step * conv) / diag;
  }
  return R;
}

// ---------------------------------------------------------------------------------------------
// Nonlinear operators

NonlinearOperators::NonlinearOperators(const LevyModel& model, double step, Index size)
    : c_(model.c), step_(step), jumps_(has_jumps(model.jumps)) {
  if (!(step > 0.0)) throw DomainError("nonlinear operators: step must be positive");
  if (!jumps_ || size == 0) return;
  VectorXd mass(size), first(size);
  for (Index m = 0; m < size; ++m) {
    const auto mom = tail_cell_moments(model.jumps, 0, static_cast<double>(m) * step, step);
    mass[m] = mom.mass;
    first[m] = mom.first;
  }
  inner_ = VectorXd::Zero(size);
  last_ = VectorXd::Zero(size);
  nu2_ = VectorXd::Zero(size);
  for (Index k = 1; k < size; ++k) {
    inner_[k] = first[k - 1] + (k < size ? mass[k] - first[k] : 0.0);
    last_[k] = first[k - 1];
    nu2_[k] = integrated_tail(model.jumps, 1, static_cast<double>(k) * step);
  }
}

double NonlinearOperators::R(const VectorXd& f, const VectorXd& F, Index i) const {
  double s = c_ * f[i] * f[i];
  if (!jumps_ || i == 0) return s;
  const double Fi = F[i];
  for (Index k = 1; k < i; ++k) s -= inner_[k] * std::expm1(F[i - k] - Fi) * f[i - k];
  s -= last_[i] * std::expm1(F[0] - Fi) * f[0];
  return s;
}

double NonlinearOperators::F(const VectorXd& f, const VectorXd& F, Index i) const {
  double s = c_ * f[i];
  if (!jumps_ || i == 0) return s;
  const double Fi = F[i];
  for (Index k = 1; k < i; ++k) s -= inner_[k] * std::expm1(F[i - k] - Fi);
  s -= last_[i] * std::expm1(F[0] - Fi);
  s -= std::expm1(-Fi) * nu2_[i];
  return s;
}

VectorXd NonlinearOperators::R_all(const VectorXd& f) const {
  const VectorXd F = cumulative_trapezoid(f, step_);
  VectorXd out(f.size());
  for (Index i = 0; i < f.size(); ++i) out[i] = R(f, F, i);
  return out;
}

VectorXd NonlinearOperators::F_all(const VectorXd& f) const {
  const VectorXd F = cumulative_trapezoid(f, step_);
  VectorXd out(f.size());
  for (Index i = 0; i < f.size(); ++i) out[i] = this->F(f, F, i);
  return out;
}

double op_R(const LevyModel& model, const VectorXd& f, double step, Index i) {
  if (i < 0 || i >= f.size()) throw UsageError("op_R: grid index outside the tabulated function");
  const NonlinearOperators ops(model, step, i + 1);
  const VectorXd head = f.head(i + 1);
  return ops.R(head, cumulative_trapezoid(head, step), i);
}

double op_F(const LevyModel& model, const VectorXd& f, double step, Index i) {
  if (i < 0 || i >= f.size()) throw UsageError("op_F: grid index outside the tabulated function");
  const NonlinearOperators ops(model, step, i + 1);
  const VectorXd head = f.head(i + 1);
  return ops.F(head, cumulative_trapezoid(head, step), i);
}

// ---------------------------------------------------------------------------------------------
// Nonlinear Volterra equation

namespace {

// ∫_{[0,t_i]} W'(t_i - s) μ(ds) on the grid.
VectorXd forcing(const ScaleTable& table, const BoundaryMeasure& mu, Index n) {
  const double h = table.step;
  VectorXd out = VectorXd::Zero(n + 1);
  for (Index i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * h;
    double v = 0.0;
    for (const auto& a : mu.atoms)
      if (a.location <= t + 1e-12 * h) v += a.mass * interpolate(table.Wp, h, std::max(0.0, t - a.location));
    for (const auto& d : mu.density) {
      if (d.from >= t) continue;
      const double hi = std::min(d.to, t);
      v += d.value * (interpolate(table.W, h, t - d.from) - interpolate(table.W, h, t - hi));
    }
    out[i] = v;
  }
  return out;
}

}  // namespace

VolterraSolution solve_V(const LevyModel& model, const ScaleTable& table, const BoundaryMeasure& mu, double horizon,
                         const VolterraOptions& options) {
  require_valid(model);
  if (table.model_fingerprint != fingerprint(model))
    throw UsageError("solve_V: scale table was built for a different model");
  if (!(horizon > 0.0) || horizon > table.horizon + 1e-9 * table.step)
    throw DomainError("solve_V: horizon must lie in (0, table horizon]");
  if (mu.last_support() > horizon + 1e-12) throw DomainError("solve_V: μ must be supported in [0, horizon]");

  const double h = table.step, c = model.c;
  const Index n = steps_in(horizon, h);
  const VectorXd phi = forcing(table, mu, n);
  const VectorXd& Wp = table.Wp;
  const NonlinearOperators ops(model, h, n + 1);

  VolterraSolution sol;
  sol.step = h;
  sol.horizon = static_cast<double>(n) * h;
  sol.model_fingerprint = table.model_fingerprint;

  VectorXd V = VectorXd::Zero(n + 1), F = VectorXd::Zero(n + 1), Rv = VectorXd::Zero(n + 1);
  // V vanishes before the first support point of μ, so every trapezoid starts at that node instead of
  // at 0. Otherwise the cell straddling the jump of V would carry half its right-hand value.
  const Index j0 = mu.empty() ? 0 : std::clamp<Index>(static_cast<Index>(std::ceil(mu.first_support() / h - 1e-9)), 0, n);
  auto accumulate = [&](Index from, Index to) {
    for (Index i = std::max<Index>(from, 1); i <= to; ++i) F[i] = i <= j0 ? 0.0 : F[i - 1] + 0.5 * h * (V[i - 1] + V[i]);
  };

  // Contraction estimate from the quadratic term alone: window·(1/c)·2c·sup V ≤ 1/4.
  const double vmax = mu.mass_up_to(horizon) / c;
  double window = options.window > 0.0 ? options.window : (vmax > 0.0 ? 0.125 / vmax : horizon);
  Index len = std::max<Index>(1, std::min<Index>(n + 1, static_cast<Index>(std::floor(window / h))));

  Index start = 0;
  VectorXd hist;
  while (start <= n) {
    const Index end = std::min(n, start + len - 1);
    const Index m = end - start + 1;
    // Convolution against the settled part [0, start).
    hist = VectorXd::Zero(m);
    for (Index i = start; i <= end; ++i) {
      if (start <= j0) break;
      double s = 0.5 * Rv[j0] * Wp[i - j0];
      const Index inner = start - j0 - 1;
      if (inner > 0) s += Rv.segment(j0 + 1, inner).dot(Wp.segment(i - start + 1, inner).reverse());
      hist[i - start] = h * s;
    }

    // Initial iterate on the window: continue V flat from the last settled value, or take φ at the start.
    for (Index i = start; i <= end; ++i) V[i] = start == 0 ? phi[i] : std::max(0.0, phi[i] - (phi[start - 1] - V[start - 1]));

    std::vector<double> history;
    bool settled = false, diverged = false;
    double previous = std::numeric_limits<double>::infinity();
    int rises = 0;
    for (int it = 0; it < options.max_iterations; ++it) {
      accumulate(start, end);
      for (Index i = start; i <= end; ++i) Rv[i] = ops.R(V, F, i);
      double change = 0.0;
      for (Index i = start; i <= end; ++i) {
        // Window part of Σ_j w_j Rv[j] W'[i-j], trapezoid endpoint weights at j = j0 and j = i.
        double s = 0.0;
        if (i > j0) {
          for (Index j = std::max(start, j0); j <= i; ++j) s += ((j == i || j == j0) ? 0.5 : 1.0) * Rv[j] * Wp[i - j];
        }
        const double next = phi[i] - hist[i - start] - h * s;
        change = std::max(change, std::abs(next - V[i]));
        V[i] = next;
      }
      history.push_back(change);
      if (!std::isfinite(change)) {
        diverged = true;
        break;
      }
      if (change <= options.tolerance) {
        settled = true;
        break;
      }
      if (change > previous && ++rises >= 3) {
        diverged = true;
        break;
      }
      previous = change;
    }

    if (!settled) {
      const double last = history.empty() ? std::numeric_limits<double>::infinity() : history.back();
      if (len == 1)
        throw ConvergenceError("solve_V: Picard iteration " + std::string(diverged ? "diverged" : "hit the iteration limit") +
                                   " on a single-step window at t=" + fmt12(static_cast<double>(start) * h),
                               last);
      len = std::max<Index>(1, len / 2);
      continue;
    }
    // Final consistent F and 𝓡 values on the window.
    accumulate(start, end);
    for (Index i = start; i <= end; ++i) Rv[i] = ops.R(V, F, i);
    sol.iterations += static_cast<int>(history.size());
    sol.residual = std::max(sol.residual, history.back());
    sol.residual_history.push_back(std::move(history));
    start = end + 1;
  }

  const double slack = 10.0 * h;
  for (Index i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * h;
    const double bound = mu.mass_up_to(t + 1e-12 * h) / c + slack;
    if (!(V[i] >= -slack) || !(V[i] <= bound))
      throw ConvergenceError("solve_V: iterate left the a-priori band 0 <= V(t) <= mu([0,t])/c at t=" + fmt12(t),
                             sol.residual);
  }

  sol.V = V;
  sol.FV = VectorXd(n + 1);
  for (Index i = 0; i <= n; ++i) sol.FV[i] = ops.F(V, F, i);
  return sol;
}

double laplace_prediction(double zeta, const VolterraSolution& solution, double x, std::optional<double> u0) {
  if (!(zeta >= 0.0)) throw DomainError("laplace_prediction: ζ must be non-negative");
  if (!(x >= 0.0) || x > solution.horizon + 1e-9 * solution.step)
    throw DomainError("laplace_prediction: x must lie in [0, horizon]");
  const double fv = interpolate(solution.FV, solution.step, x);
  if (u0) {
    if (!(*u0 > 0.0)) throw DomainError("laplace_prediction: u0 must be positive");
    return 1.0 / (1.0 + *u0 * fv);
  }
  return std::exp(-zeta * fv);
}

}  // namespace levylt
