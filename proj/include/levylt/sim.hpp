#pragma once

#include "levylt/cp_approx.hpp"
#include "levylt/levy_model.hpp"
#include "levylt/rng.hpp"
#include "levylt/scale_function.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace levylt {

enum class Scheme { Cmj, Cir, Euler };

std::string to_string(Scheme s);
/// "cmj", "cir" or "euler"; anything else is a UsageError.
Scheme parse_scheme(const std::string& text);

/// Spatial sampling grid x_i = i·dx, i = 0..size-1, x_max included up to round-off.
struct PathGrid {
  double dx = 0.01;
  double x_max = 1.0;

  Eigen::Index size() const;
  double x(Eigen::Index i) const { return static_cast<double>(i) * dx; }
  /// Index of the grid point at x; UsageError when x is not on the grid.
  Eigen::Index index_of(double x) const;
};

struct LocalTimePath {
  PathGrid grid;
  Eigen::VectorXd values;
  double zeta = 0.0;
  Scheme scheme = Scheme::Cmj;
  std::uint64_t seed = 0;
  int n = 0;  // CMJ scaling index, 0 for the other schemes
};

struct PathEnsemble {
  std::vector<LocalTimePath> paths;
  PathGrid grid;
  Scheme scheme = Scheme::Cmj;
  std::uint64_t master_seed = 0;
  double zeta = 0.0;
  int n = 0;
  std::string model_fingerprint;

  std::size_t size() const { return paths.size(); }
  /// Values of every path at grid index i.
  Eigen::VectorXd column(Eigen::Index i) const;
};

// ---------------------------------------------------------------------------------------------
// CMJ

struct PopulationEvent {
  double time;
  int change;  // +1 birth, -1 death
};

/// Integer-valued step function Z(t) = initial + Σ_{events ≤ t} change, known on [0, horizon].
struct PopulationPath {
  long initial = 0;
  double horizon = 0.0;
  std::vector<PopulationEvent> events;

  long value_at(double t) const;
};

struct CmjOptions {
  std::uint64_t event_cap = 100'000'000;
};

/// Exact simulation of the binary CMJ process started from k ancestors, up to horizon_fast.
PopulationPath simulate_cmj(const CpApprox& approx, long k, double horizon_fast, Rng& rng,
                            const CmjOptions& options = {});

/// X(x_i) = Z(n·x_i)/n. DomainError if Z is not known up to n·x_max.
LocalTimePath rescale_to_path(const PopulationPath& z, int n, const PathGrid& grid);

/// simulate_cmj + rescale_to_path without materialising the event list.
LocalTimePath simulate_cmj_path(const CpApprox& approx, double zeta, const PathGrid& grid, Rng& rng,
                                const CmjOptions& options = {});

/// Ancestor count [nζ].
long ancestor_count(int n, double zeta);

/// Two populations driven by one event stream; the first never exceeds the second.
/// Requires b1 ≥ b2 ≥ 0 and 0 ≤ ζ1 ≤ ζ2; both share c and ν from `base`.
std::pair<LocalTimePath, LocalTimePath> simulate_coupled(const LevyModel& base, double b1, double zeta1, double b2,
                                                         double zeta2, int n, const PathGrid& grid, Rng& rng,
                                                         const CmjOptions& options = {});

// ---------------------------------------------------------------------------------------------
// Diffusion and Euler schemes

/// Exact transitions of dX = -(b/c)X dt + sqrt(2X/c) dB. Requires ν = 0.
LocalTimePath simulate_cir(const LevyModel& model, double zeta, const PathGrid& grid, Rng& rng);

struct EulerOptions {
  /// Replace every random draw by zero (Gaussian increments, jump and overshoot counts).
  bool zero_noise = false;
};

/// Kernels shared by every Euler path on one table: W' and K = W'∗ν̄ at cell midpoints.
struct EulerKernels {
  LevyModel model;
  double step = 0.0;
  Eigen::Index steps = 0;
  Eigen::VectorXd W;        // scale function on the nodes
  Eigen::VectorXd Wp;       // W' on the nodes
  Eigen::VectorXd Wp_mid;   // W'((k + 1/2)·step)
  Eigen::VectorXd K_mid;    // (W'∗ν̄)((k + 1/2)·step)
  double nu_bar0 = 0.0;     // ν̄(0)
  double nu_bar2_0 = 0.0;   // ν̿(0)
};

/// Throws UnsupportedError for infinite activity and UsageError for a foreign table.
EulerKernels prepare_euler(const LevyModel& model, const ScaleTable& table, double x_max);

/// Euler scheme on the table's grid for the convolution form driven by W'. Finite activity only.
/// Values are sampled at the path grid by linear interpolation and floored at 0 on output; the
/// recursion itself keeps the raw values.
LocalTimePath simulate_euler(const EulerKernels& kernels, double zeta, const PathGrid& grid, Rng& rng,
                             const EulerOptions& options = {});
LocalTimePath simulate_euler(const LevyModel& model, const ScaleTable& table, double zeta, const PathGrid& grid,
                             Rng& rng, const EulerOptions& options = {});

// ---------------------------------------------------------------------------------------------
// Ensembles

struct EnsembleRequest {
  Scheme scheme = Scheme::Cmj;
  LevyModel model;
  double zeta = 1.0;
  int n = 100;           // CMJ only
  double step = 1e-3;    // Euler internal step
  long paths = 1000;
  PathGrid grid;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  CmjOptions cmj;
  /// When set, each path first draws its own ζ from its stream (overrides `zeta`).
  std::function<double(Rng&)> zeta_draw;
};

/// Path i uses the stream stream_seed(seed, i); results do not depend on `threads`.
PathEnsemble simulate_ensemble(const EnsembleRequest& request);

struct CoupledEnsemble {
  PathEnsemble first;
  PathEnsemble second;
};

CoupledEnsemble simulate_coupled_ensemble(const LevyModel& base, double b1, double zeta1, double b2, double zeta2,
                                          int n, const PathGrid& grid, long paths, std::uint64_t seed,
                                          unsigned threads = 1);

}  // namespace levylt
