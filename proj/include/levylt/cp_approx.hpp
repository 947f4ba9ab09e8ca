#pragma once

#include "levylt/levy_model.hpp"
#include "levylt/rng.hpp"

#include <Eigen/Dense>

#include <string>

namespace levylt {

/// The n-th compound-Poisson approximation. Times on the "fast" axis are n times spatial levels.
struct CpApprox {
  int n = 1;
  double b = 0.0;
  double c = 1.0;
  JumpMeasure jumps;
  double eta = 0.0;            // truncation level η_n
  double theta = 0.0;          // mixture weight θ_n
  double gamma = 0.0;          // arrival rate γ_n
  double p = 1.0;              // size-biased split weight p_n
  double mean_lifetime = 0.0;  // ‖Π̄_n‖
  double tail_eta = 0.0;       // ν̄(η_n)
  double integrated_tail_eta = 0.0;  // ν̿(η_n)

  /// Grid on [0, horizon_fast] with step delta. Empty when built without a horizon.
  double delta = 0.0;
  double horizon_fast = 0.0;
  Eigen::VectorXd Pi_bar;  // Π̄_n
  Eigen::VectorXd R_pi;    // resolvent of γ_n·Π̄_n
  Eigen::VectorXd R_pi_integral;
  Eigen::VectorXd survival;  // P(ancestor lifetime > t)
  std::string model_fingerprint;

  bool has_resolvent() const { return R_pi.size() > 0; }
  double criticality() const { return gamma * mean_lifetime; }
};

/// Default resolvent step on the fast axis.
inline double default_resolvent_step(const LevyModel& model) { return model.c / 50.0; }

/// Builds the approximation. `horizon` is spatial; the resolvent grid covers [0, n·horizon] on the
/// fast axis with step `delta`. horizon = 0 skips the grid (samplers only).
/// Throws ParameterError when θ_n ≥ 1 or γ_n would be non-positive, UnsupportedError when the
/// truncation level cannot be bracketed.
CpApprox build_approx(const LevyModel& model, int n, double delta, double horizon);

/// R(t, y) = 1{y > t} + ∫_{(t-y)^+}^t R_Π on the fast axis.
double resolvent_R2(const CpApprox& approx, double t, double y);

/// Lifetime of a child: Exp(mean c), plus n·(Y - η_n) with probability θ_n.
double sample_jump(const CpApprox& approx, Rng& rng);

/// Residual lifetime of an ancestor, drawn from Π̄_n / ‖Π̄_n‖.
double sample_ancestor_lifetime(const CpApprox& approx, Rng& rng);

/// E Z_k(t) = k·∫ R(t, y) Π*_n(dy) for t on the fast axis.
double expected_population(const CpApprox& approx, double k, double t);

}  // namespace levylt
