#pragma once

#include "levylt/levy_model.hpp"
#include "levylt/scale_function.hpp"
#include "levylt/sim.hpp"
#include "levylt/volterra.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace levylt {

/// Sample mean and standard error of the mean. Values are sorted before a compensated sum, so
/// the result does not depend on their order.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  long count = 0;
};
MeanSe mean_and_se(std::vector<double> values);

/// Neumaier-compensated sum in the given order.
double compensated_sum(const std::vector<double>& values);

/// (estimate - prediction) / se. With se = 0 this is 0 on exact agreement and ±∞ otherwise.
double z_score(double estimate, double se, double prediction);

struct PointCheck {
  double x = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double prediction = 0.0;
  double z = 0.0;
  /// Allowance for discretisation bias, added to the 3-SE band.
  double bias_budget = 0.0;
  bool pass = false;
};

/// |estimate - prediction| ≤ 3·se + bias_budget.
PointCheck make_point(double x, double estimate, double se, double prediction, double bias_budget);

struct VerificationReport {
  std::string quantity;
  std::string rule;
  std::vector<PointCheck> points;
  bool pass = false;
  /// Ordered key/value pairs (paths, n, seed, scheme, estimator notes, ...).
  std::vector<std::pair<std::string, std::string>> metadata;

  void note(const std::string& key, const std::string& value) { metadata.emplace_back(key, value); }
};

/// Pointwise mean against ζ(1 - b·W(x)); passes when at least 95% of grid points are within band.
VerificationReport estimate_mean_curve(const PathEnsemble& ens, const LevyModel& model, const ScaleTable& table,
                                       double bias_budget = 0.0);

/// Sample mean of exp(-∫_{[0,x]} X(x - s) μ(ds)) with its standard error.
MeanSe empirical_laplace(const PathEnsemble& ens, const BoundaryMeasure& mu, double x);
double path_functional(const LocalTimePath& path, const BoundaryMeasure& mu, double x);

struct LaplaceRequest {
  LevyModel model;
  double zeta = 1.0;
  BoundaryMeasure mu;
  double x = 1.0;
  Scheme scheme = Scheme::Cmj;
  long paths = 1000;
  int n = 100;
  double step = 1e-3;  // Volterra and Euler grid
  double dx = 0.01;    // path grid
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double bias_budget = 0.0;
  /// Total-local-time variant: ζ is drawn per path from Exp(mean u0) and the prediction is
  /// (1 + u0·𝓕∘V(x))^{-1}.
  std::optional<double> u0;
};

VerificationReport verify_laplace(const LaplaceRequest& request);

/// Monte-Carlo estimate of u⁰(0) (mean total local time at 0) from the n-th approximation. Needs b > 0.
MeanSe estimate_u0(const LevyModel& model, long paths, int n, std::uint64_t seed, unsigned threads = 1);

/// Sample p-th moment at every grid point, with prediction set to the envelope
/// (ζ ∨ ζ^p)(1 + W(x))^{2p-2}. Passes when every moment/envelope ratio is finite and positive
/// (or the ensemble is identically zero).
VerificationReport estimate_moment(const PathEnsemble& ens, const ScaleTable& table, double p);

/// max |f(y) - f(z)| / |y - z|^κ over adjacent pairs, dyadic spans and the full span; κ ∈ (0, 1/2].
double holder_coefficient(const Eigen::VectorXd& values, double dx, double kappa);
double holder_coefficient(const LocalTimePath& path, double kappa);

struct HolderStudy {
  MeanSe fine;
  MeanSe coarse;
  double fine_second_moment = 0.0;
  double coarse_second_moment = 0.0;
  bool pass = false;
};

/// Coefficients of each path on its own grid and on every other point of it; first and second
/// moments must agree within a factor 2.
HolderStudy holder_refinement(const PathEnsemble& fine, double kappa);

/// Number of (path, grid point) pairs with X1 > X2.
long check_comparison(const PathEnsemble& first, const PathEnsemble& second);

}  // namespace levylt
