#pragma once

#include "levylt/rng.hpp"

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace levylt {

// Jump-measure families. Each one has closed-form tails, which every quadrature and sampler
// downstream relies on.

struct ZeroJumps {};

/// ν(dy) = (rate/mean)·e^{-y/mean} dy, so ν̄(y) = rate·e^{-y/mean}.
struct ExponentialJumps {
  double rate;
  double mean;
};

struct Atom {
  double weight;
  double location;
};

/// ν = Σ w_i δ_{y_i}.
struct AtomicJumps {
  std::vector<Atom> atoms;
};

/// ν(dy) = C·y^{-1-α}·e^{-λ_T y} dy with α ∈ (0,2).
struct TemperedPowerJumps {
  double scale;
  double index;
  double tempering;
};

using JumpMeasure = std::variant<ZeroJumps, ExponentialJumps, AtomicJumps, TemperedPowerJumps>;

/// Spectrally positive Lévy triplet: drift -b (b ≥ 0), Gaussian coefficient c > 0, jump measure ν.
struct LevyModel {
  double b = 0.0;
  double c = 1.0;
  JumpMeasure jumps = ZeroJumps{};
};

/// Φ(λ) = bλ + cλ² + ∫(e^{-λy} - 1 + λy) ν(dy). Throws DomainError for λ < 0.
double laplace_exponent(const LevyModel& model, double lambda);

/// Φ'(λ), closed form per family.
double laplace_exponent_derivative(const LevyModel& model, double lambda);

struct Tails {
  double tail;        // ν̄(y) = ν([y,∞))
  double integrated;  // ν̿(y) = ∫_y^∞ ν̄
};

/// Both tails at y > 0. Throws DomainError for y ≤ 0; use the *_at_zero accessors for y = 0.
Tails tail_functions(const LevyModel& model, double y);

/// k-fold integrated tail T_k(y) = ∫_{[y,∞)} (v - y)^k / k! ν(dv), for k = 0..3 and y ≥ 0.
/// T_0 = ν̄, T_1 = ν̿. May return +∞ at y = 0.
double integrated_tail(const JumpMeasure& jumps, int order, double y);

inline double tail(const JumpMeasure& jumps, double y) { return integrated_tail(jumps, 0, y); }
inline double tail_at_zero(const JumpMeasure& jumps) { return integrated_tail(jumps, 0, 0.0); }
inline double integrated_tail_at_zero(const JumpMeasure& jumps) { return integrated_tail(jumps, 1, 0.0); }

/// ν̄(0) < ∞.
bool finite_activity(const JumpMeasure& jumps);
bool has_jumps(const JumpMeasure& jumps);

/// Moments of T_order over the cell [a, a+h]: mass = ∫ T, first = ∫ ((u-a)/h)·T du.
/// `mass` is +∞ when the cell touches a non-integrable singularity at 0; `first` stays finite
/// whenever ∫_0 u·T_order(u) du does.
struct CellMoments {
  double mass;
  double first;
};
CellMoments tail_cell_moments(const JumpMeasure& jumps, int order, double a, double h);

/// Empty iff c > 0, b ≥ 0 and the family parameters are in range.
std::vector<std::string> validate(const LevyModel& model);

/// Throws ParameterError listing every violation.
void require_valid(const LevyModel& model);

/// Stable textual identity used to tie tables and approximations to the model that built them.
std::string fingerprint(const LevyModel& model);

/// Flat key/value block: family tag plus named parameters, as stored in the [model] config section.
std::map<std::string, std::string> model_to_keys(const LevyModel& model);
LevyModel model_from_keys(const std::map<std::string, std::string>& keys);

/// Overshoot Y - η of a jump Y drawn from ν restricted to (η, ∞). For η = 0 this is the jump itself.
double sample_conditional_jump(const JumpMeasure& jumps, double eta, Rng& rng);

/// U with density ν̄(η + u) / ν̿(η) on (0, ∞).
double sample_integrated_tail_overshoot(const JumpMeasure& jumps, double eta, Rng& rng);

}  // namespace levylt
