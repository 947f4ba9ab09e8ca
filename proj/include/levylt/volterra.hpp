#pragma once

#include "levylt/levy_model.hpp"
#include "levylt/scale_function.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace levylt {

struct DiracMass {
  double location;
  double mass;
};

/// Constant density `value` on [from, to).
struct DensityPiece {
  double from;
  double to;
  double value;
};

/// Non-negative boundary measure μ = Σ θ_i δ_{s_i} + piecewise-constant density.
struct BoundaryMeasure {
  std::vector<DiracMass> atoms;
  std::vector<DensityPiece> density;

  bool empty() const;
  /// μ([0, t]).
  double mass_up_to(double t) const;
  /// Density value at s (pieces may overlap; values add).
  double density_at(double s) const;
  /// Leftmost point of the support; +∞ for the zero measure.
  double first_support() const;
  /// Largest point of the support.
  double last_support() const;
};

/// Grammar: comma-separated items, each `delta:<s>:<mass>` or `density:<from>:<to>:<value>`.
/// An empty string or `zero` is the zero measure.
BoundaryMeasure parse_boundary_measure(std::string_view text);
std::string to_string(const BoundaryMeasure& mu);

/// Resolvent of the second kind: R = g + g∗R on the grid t_i = i·step, trapezoidal marching.
/// Throws DomainError when 1 - step·g(0)/2 ≤ 0.
Eigen::VectorXd linear_resolvent(const Eigen::VectorXd& kernel, double step);

/// Evaluates 𝓡∘f and 𝓕∘f on a uniform grid. The ν-integrals are rewritten by parts as
///   𝓡∘f(t) = c f(t)² + ∫_0^t (1 - e^{-I_t(y)}) f(t-y) ν̄(y) dy,
///   𝓕∘f(t) = c f(t) + ∫_0^t (1 - e^{-I_t(y)}) ν̄(y) dy + (1 - e^{-I_t(t)}) ν̿(t),
/// with I_t(y) = ∫_{t-y}^t f, and integrated against ν̄ cell by cell (product trapezoid).
class NonlinearOperators {
 public:
  NonlinearOperators(const LevyModel& model, double step, Eigen::Index size);

  double R(const Eigen::VectorXd& f, const Eigen::VectorXd& cumulative, Eigen::Index i) const;
  double F(const Eigen::VectorXd& f, const Eigen::VectorXd& cumulative, Eigen::Index i) const;
  Eigen::VectorXd R_all(const Eigen::VectorXd& f) const;
  Eigen::VectorXd F_all(const Eigen::VectorXd& f) const;

  double step() const { return step_; }

 private:
  double c_;
  double step_;
  bool jumps_;
  Eigen::VectorXd inner_;  // ν̄ weight of an interior y-node
  Eigen::VectorXd last_;   // ν̄ weight of the end node y = t_i (cell i-1's far moment)
  Eigen::VectorXd nu2_;    // ν̿ at the nodes
};

/// 𝓡∘f(t_i) for f tabulated on i·step.
double op_R(const LevyModel& model, const Eigen::VectorXd& f, double step, Eigen::Index i);
/// 𝓕∘f(t_i) for f tabulated on i·step.
double op_F(const LevyModel& model, const Eigen::VectorXd& f, double step, Eigen::Index i);

struct VolterraOptions {
  double tolerance = 1e-10;
  /// Per window.
  int max_iterations = 200;
  /// Initial window length; 0 picks one from a contraction estimate.
  double window = 0.0;
};

struct VolterraSolution {
  double step = 0.0;
  double horizon = 0.0;
  Eigen::VectorXd V;
  Eigen::VectorXd FV;
  /// Picard sweeps summed over all windows.
  int iterations = 0;
  /// Largest final sweep change over all windows.
  double residual = 0.0;
  /// Sup-norm change of every accepted sweep, one list per window.
  std::vector<std::vector<double>> residual_history;
  std::string model_fingerprint;
};

/// Picard iteration V ← W'∗dμ - (𝓡∘V)∗W', continued window by window across [0, horizon]. The
/// quadratic term limits how long a window can be before the iteration stops contracting, so a
/// window that fails to settle is halved and retried. Atoms of μ are applied by shifting W';
/// densities through differences of W; the nonlinear convolution uses the trapezoid rule.
/// Throws ConvergenceError when a single-step window still fails, or when the accepted iterate
/// leaves 0 ≤ V(t) ≤ μ([0,t])/c + 10·step.
VolterraSolution solve_V(const LevyModel& model, const ScaleTable& table, const BoundaryMeasure& mu, double horizon,
                         const VolterraOptions& options = {});

/// exp(-ζ·𝓕∘V(x)), or (1 + u0·𝓕∘V(x))^{-1} when u0 is given. Linear interpolation in x.
double laplace_prediction(double zeta, const VolterraSolution& solution, double x,
                          std::optional<double> u0 = std::nullopt);

}  // namespace levylt
