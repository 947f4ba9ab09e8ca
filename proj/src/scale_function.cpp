#include "levylt/scale_function.hpp"

#include "levylt/error.hpp"
#include "levylt/grid.hpp"

#include <cmath>

namespace levylt {

using Eigen::Index;
using Eigen::VectorXd;

ScaleTable scale_table(const LevyModel& model, double step, double horizon) {
  require_valid(model);
  if (!(step > 0.0)) throw DomainError("scale_table: step must be positive");
  if (!(horizon >= step)) throw DomainError("scale_table: horizon must be at least one step");
  const Index n = steps_in(horizon, step);
  const double b = model.b, c = model.c;

  // Per-cell weights of the kernel b + ν̿ against the two endpoint values of W'.
  VectorXd near(n), far(n);
  for (Index m = 0; m < n; ++m) {
    const auto mom = tail_cell_moments(model.jumps, 1, static_cast<double>(m) * step, step);
    const double mass = b * step + mom.mass;
    const double first = 0.5 * b * step + mom.first;
    near[m] = mass - first;  // weight of W'(x_i - u) at the cell edge closer to x_i
    far[m] = first;
  }

  ScaleTable t;
  t.step = step;
  t.horizon = static_cast<double>(n) * step;
  t.model_fingerprint = fingerprint(model);
  t.Wp.resize(n + 1);
  t.Wp[0] = 1.0 / c;
  const double diag = c + near[0];
  for (Index i = 1; i <= n; ++i) {
    double rhs = 1.0 - far.head(i).dot(t.Wp.head(i).reverse());
    if (i > 1) rhs -= near.segment(1, i - 1).dot(t.Wp.segment(1, i - 1).reverse());
    t.Wp[i] = rhs / diag;
  }
  t.W = cumulative_trapezoid(t.Wp, step);

  t.Wpp.resize(n + 1);
  if (n >= 2) {
    t.Wpp[0] = (-3.0 * t.Wp[0] + 4.0 * t.Wp[1] - t.Wp[2]) / (2.0 * step);
    t.Wpp[n] = (3.0 * t.Wp[n] - 4.0 * t.Wp[n - 1] + t.Wp[n - 2]) / (2.0 * step);
    for (Index i = 1; i < n; ++i) t.Wpp[i] = (t.Wp[i + 1] - t.Wp[i - 1]) / (2.0 * step);
  } else {
    t.Wpp.setConstant((t.Wp[1] - t.Wp[0]) / step);
  }
  const double nu2_0 = integrated_tail_at_zero(model.jumps);
  if (std::isfinite(nu2_0)) t.Wpp[0] = -(b + nu2_0) / (c * c);
  return t;
}

double identity_residual(const ScaleTable& table, const LevyModel& model) {
  if (table.model_fingerprint != fingerprint(model))
    throw UsageError("identity_residual: table was built for a different model");
  const Index n = table.size() - 1;
  VectorXd nu2(n + 1);
  for (Index k = 0; k <= n; ++k) nu2[k] = integrated_tail(model.jumps, 1, static_cast<double>(k) * table.step);
  if (!std::isfinite(nu2[0])) throw UnsupportedError("identity_residual: integrated tail is infinite at 0");

  double worst = 0.0;
  for (Index i = 0; i <= n; ++i) {
    const double conv = simpson_nodes(i, table.step, [&](Index j) { return table.Wp[j] * nu2[i - j]; });
    const double r = model.b * table.W[i] + model.c * table.Wp[i] + conv - 1.0;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double drift_shift_residual(const ScaleTable& table_b, const ScaleTable& table_beta, double b, double beta) {
  if (table_b.size() != table_beta.size() || table_b.step != table_beta.step)
    throw UsageError("drift_shift_residual: tables must share step and horizon");
  const Index n = table_b.size() - 1;
  double worst = 0.0;
  for (Index i = 0; i <= n; ++i) {
    const double conv =
        simpson_nodes(i, table_b.step, [&](Index j) { return table_beta.Wp[j] * table_b.Wp[i - j]; });
    const double r = table_b.Wp[i] - table_beta.Wp[i] - (beta - b) * conv;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double laplace_crosscheck(const ScaleTable& table, const LevyModel& model, double lambda) {
  if (table.model_fingerprint != fingerprint(model))
    throw UsageError("laplace_crosscheck: table was built for a different model");
  if (!(lambda > 0.0)) throw DomainError("laplace_crosscheck: λ must be positive");
  if (lambda * table.horizon < 10.0) throw DomainError("laplace_crosscheck: truncation too coarse, need λ·T >= 10");
  const Index n = table.size() - 1;
  const double quad = simpson_nodes(n, table.step, [&](Index j) { return std::exp(-lambda * table.x(j)) * table.Wp[j]; });
  const double tail = table.Wp[n] * std::exp(-lambda * table.horizon) / lambda;
  const double exact = lambda / laplace_exponent(model, lambda);
  return std::abs(quad + tail - exact) / exact;
}

}  // namespace levylt
