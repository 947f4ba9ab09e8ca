#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace levylt {

/// Number of steps of size `step` that fit in [0, horizon] (tolerant to round-off in the ratio).
inline Eigen::Index steps_in(double horizon, double step) {
  return static_cast<Eigen::Index>(std::floor(horizon / step + 1e-9));
}

/// Linear interpolation of values tabulated at i*step, i = 0..size-1. Zero for x < 0, clamps past the end.
inline double interpolate(const Eigen::VectorXd& values, double step, double x) {
  if (x < 0.0) return 0.0;
  const double pos = x / step;
  const auto last = values.size() - 1;
  if (pos >= static_cast<double>(last)) return values[last];
  const auto i = static_cast<Eigen::Index>(pos);
  const double w = pos - static_cast<double>(i);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

/// Running trapezoidal integral: out[i] = ∫_0^{i*step} f.
inline Eigen::VectorXd cumulative_trapezoid(const Eigen::VectorXd& f, double step) {
  Eigen::VectorXd out(f.size());
  if (f.size() == 0) return out;
  out[0] = 0.0;
  for (Eigen::Index i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * step * (f[i - 1] + f[i]);
  return out;
}

/// Composite Simpson over nodes 0..m of a sampled integrand, with a 3/8 panel when m is odd.
template <class Sample>
double simpson_nodes(Eigen::Index m, double step, Sample&& g) {
  if (m <= 0) return 0.0;
  if (m == 1) return 0.5 * step * (g(0) + g(1));
  double total = 0.0;
  Eigen::Index even = m;
  if (m % 2 == 1) {
    even = m - 3;
    total += 3.0 * step / 8.0 * (g(m - 3) + 3.0 * g(m - 2) + 3.0 * g(m - 1) + g(m));
  }
  if (even > 0) {
    double s = g(0) + g(even);
    for (Eigen::Index k = 1; k < even; ++k) s += (k % 2 == 1 ? 4.0 : 2.0) * g(k);
    total += step / 3.0 * s;
  }
  return total;
}

}  // namespace levylt
