#pragma once

#include "levylt/levy_model.hpp"

#include <Eigen/Dense>

#include <string>

namespace levylt {

/// W, W', W'' tabulated at x_i = i·step, i = 0..⌊horizon/step⌋.
struct ScaleTable {
  double step = 0.0;
  double horizon = 0.0;
  Eigen::VectorXd W;
  Eigen::VectorXd Wp;
  Eigen::VectorXd Wpp;
  std::string model_fingerprint;

  Eigen::Index size() const { return W.size(); }
  double x(Eigen::Index i) const { return static_cast<double>(i) * step; }
};

/// Solves c·W'(x) + ∫_0^x W'(s)(b + ν̿(x-s)) ds = 1 by trapezoidal marching. The kernel is
/// integrated exactly over each cell against the piecewise-linear W' (product trapezoid), which
/// keeps the scheme second order and copes with ν̿(0+) = ∞. W is the trapezoidal integral of W';
/// W'' comes from finite differences with W''(0+) pinned to -(b + ν̿(0+))/c² when finite.
ScaleTable scale_table(const LevyModel& model, double step, double horizon);

/// max_x |b·W(x) + c·W'(x) + (W'∗ν̿)(x) - 1|, convolution by composite Simpson on the table nodes.
/// Requires ν̿(0+) < ∞.
double identity_residual(const ScaleTable& table, const LevyModel& model);

/// max_x |W'(x) - W'_β(x) - (β - b)·(W'_β ∗ W')(x)| for tables of the same model with drifts b and β.
double drift_shift_residual(const ScaleTable& table_b, const ScaleTable& table_beta, double b, double beta);

/// Relative gap between ∫_0^∞ e^{-λx} W'(x) dx (Simpson on the table plus a flat tail beyond the
/// horizon) and λ/Φ(λ). Requires λ·horizon ≥ 10.
double laplace_crosscheck(const ScaleTable& table, const LevyModel& model, double lambda);

}  // namespace levylt
