#include "levylt/error.hpp"
#include "levylt/volterra.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include <cmath>
#include <limits>

using namespace levylt;
using Eigen::Index;
using Eigen::VectorXd;

namespace {

const LevyModel kRiccati{0.0, 0.5, ZeroJumps{}};
const LevyModel kExp{0.5, 1.0, ExponentialJumps{1.0, 1.0}};
const LevyModel kTempered{0.2, 1.0, TemperedPowerJumps{0.5, 0.7, 1.0}};

VectorXd tabulate(double step, Index n, auto&& f) {
  VectorXd out(n + 1);
  for (Index i = 0; i <= n; ++i) out[i] = f(static_cast<double>(i) * step);
  return out;
}

// I_t(y) = ∫_{(t-y)^+}^t dr/(1+r), in closed form.
double log_inner(double t, double y) { return std::log((1.0 + t) / (1.0 + std::max(t - y, 0.0))); }

// 𝓕∘f(t) for f(r) = 1/(1+r), integrating the definition directly against the library's ν̄.
double oracle_F(const LevyModel& m, double t) {
  boost::math::quadrature::tanh_sinh<double> near;
  auto g = [&](double y) { return y <= 1e-100 ? 0.0 : -std::expm1(-log_inner(t, y)) * tail(m.jumps, y); };
  return m.c / (1.0 + t) + near.integrate(g, 0.0, t, 1e-13) + -std::expm1(-log_inner(t, t)) * integrated_tail(m.jumps, 1, t);
}

// 𝓡∘f(t) from the Lévy density itself: c f(t)² + ∫ (e^{-I} - 1 + I) ν(dy).
double oracle_R_tempered(const TemperedPowerJumps& j, double c, double t) {
  boost::math::quadrature::tanh_sinh<double> near;
  auto psi = [](double z) { return z < 1e-5 ? z * z * (0.5 - z / 6.0) : std::expm1(-z) + z; };
  auto g = [&](double y) {
    if (y <= 1e-100) return 0.0;
    return psi(log_inner(t, y)) * j.scale * std::pow(y, -1.0 - j.index) * std::exp(-j.tempering * y);
  };
  const double f = 1.0 / (1.0 + t);
  return c * f * f + near.integrate(g, 0.0, t, 1e-13) + psi(log_inner(t, t)) * tail(j, t);
}

VolterraSolution solve(const LevyModel& m, const std::string& mu, double step, double horizon) {
  return solve_V(m, scale_table(m, step, horizon), parse_boundary_measure(mu), horizon);
}

}  // namespace

TEST_SUITE("volterra") {
  TEST_CASE("Linear resolvent of an exponential kernel") {
    const double step = 1e-3;
    const VectorXd g = tabulate(step, 10000, [](double t) { return 0.8 * std::exp(-t); });
    const VectorXd r = linear_resolvent(g, step);
    CHECK(r[0] == doctest::Approx(0.8).epsilon(1e-12));
    double worst = 0.0;
    for (Index i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - 0.8 * std::exp(-0.2 * i * step)));
    CHECK(worst <= 1e-5);

    CHECK(linear_resolvent(VectorXd::Zero(50), step).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(linear_resolvent(VectorXd::Constant(10, 2.0), 1.0), DomainError);
  }

  TEST_CASE("Operator R reference values") {
    const double step = 1e-3;
    const Index n = 2000;
    CHECK(op_R(kExp, VectorXd::Zero(n + 1), step, n) == 0.0);
    CHECK(op_R(LevyModel{0.0, 0.5, ZeroJumps{}}, VectorXd::Constant(n + 1, 2.0), step, n) == doctest::Approx(2.0));
    const LevyModel atom{0.0, 1.0, AtomicJumps{{{1.0, 1.0}}}};
    CHECK(op_R(atom, VectorXd::Ones(n + 1), step, n) == doctest::Approx(1.0 + std::exp(-1.0)).epsilon(1e-7));

    const VectorXd f = tabulate(step, n, [](double r) { return 1.0 / (1.0 + r); });
    const auto& tp = std::get<TemperedPowerJumps>(kTempered.jumps);
    for (Index i : {Index{500}, Index{2000}}) {
      CHECK(op_R(kTempered, f, step, i) == doctest::Approx(oracle_R_tempered(tp, kTempered.c, i * step)).epsilon(1e-5));
    }
    // 𝓡∘f ≥ 0 for f ≥ 0.
    NonlinearOperators ops(kTempered, step, n + 1);
    const VectorXd wiggly = tabulate(step, n, [](double r) { return 1.0 + std::sin(7.0 * r); });
    CHECK(ops.R_all(wiggly).minCoeff() >= 0.0);
  }

  TEST_CASE("Operator F against the defining integral") {
    const double step = 1e-3;
    const Index n = 5000;
    CHECK(op_F(kExp, VectorXd::Zero(n + 1), step, n) == 0.0);
    const VectorXd f = tabulate(step, n, [](double r) { return 1.0 / (1.0 + r); });
    CHECK(op_F(LevyModel{0.3, 0.7, ZeroJumps{}}, f, step, 1234) == doctest::Approx(0.7 * f[1234]));

    // ν̄(y) = e^{-y}, f ≡ 1, t = 5: c + ∫_0^∞ (1 - e^{-min(y,t)}) e^{-y} dy.
    boost::math::quadrature::tanh_sinh<double> near;
    boost::math::quadrature::exp_sinh<double> far;
    const double t = 5.0;
    const double oracle = 1.0 + near.integrate([](double y) { return -std::expm1(-y) * std::exp(-y); }, 0.0, t, 1e-14) +
                          far.integrate([&](double y) { return -std::expm1(-t) * std::exp(-y); }, t,
                                        std::numeric_limits<double>::infinity(), 1e-14);
    CHECK(op_F(kExp, VectorXd::Ones(n + 1), step, n) == doctest::Approx(oracle).epsilon(1e-7));

    for (const auto& m : {kExp, kTempered}) {
      for (Index i : {Index{300}, Index{4000}}) CHECK(op_F(m, f, step, i) == doctest::Approx(oracle_F(m, i * step)).epsilon(1e-5));
    }
  }

  TEST_CASE("Riccati case against its closed form") {
    const VolterraSolution s = solve(kRiccati, "delta:0:1", 1e-3, 5.0);
    double wv = 0.0, wf = 0.0;
    for (Index i = 0; i < s.V.size(); ++i) {
      const double t = i * s.step;
      wv = std::max(wv, std::abs(s.V[i] - 2.0 / (1.0 + 2.0 * t)));
      wf = std::max(wf, std::abs(s.FV[i] - 1.0 / (1.0 + 2.0 * t)));
    }
    CHECK(wv <= 1e-6);
    CHECK(wf <= 1e-6);
    CHECK(laplace_prediction(1.0, s, 1.0) == doctest::Approx(std::exp(-1.0 / 3.0)).epsilon(1e-6));
    CHECK(laplace_prediction(0.0, s, 1.0) == 1.0);
    CHECK(laplace_prediction(1.0, s, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(laplace_prediction(1.0, s, 5.5), DomainError);
    CHECK_THROWS_AS(laplace_prediction(-1.0, s, 1.0), DomainError);
  }

  TEST_CASE("Trivial measures") {
    const VolterraSolution zero = solve(kExp, "zero", 1e-3, 2.0);
    CHECK(zero.V.cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.FV.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& m : {kExp, kTempered, LevyModel{0.3, 2.0, AtomicJumps{{{1.0, 0.5}}}}}) {
      const VolterraSolution s = solve(m, "delta:0:0.7", 1e-3, 1.0);
      CHECK(s.V[0] == doctest::Approx(0.7 / m.c).epsilon(1e-14));
    }
    // Nothing happens before the first atom.
    const VolterraSolution late = solve(kExp, "delta:1:0.5", 1e-3, 2.0);
    for (Index i = 0; i < 1000; ++i) CHECK(late.V[i] == 0.0);
    CHECK(late.V[1000] == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("A-priori band, monotonicity in μ and contraction") {
    const double step = 1e-3, horizon = 4.0;
    for (const auto& m : {kExp, kTempered}) {
      const auto mu1 = parse_boundary_measure("delta:0:0.5");
      const auto mu2 = parse_boundary_measure("delta:0:1,density:0:2:0.3,delta:3:0.2");
      const ScaleTable table = scale_table(m, step, horizon);
      const VolterraSolution s1 = solve_V(m, table, mu1, horizon);
      const VolterraSolution s2 = solve_V(m, table, mu2, horizon);
      for (Index i = 0; i < s2.V.size(); ++i) {
        const double t = i * step;
        CHECK(s2.V[i] >= 0.0);
        CHECK(s2.V[i] <= mu2.mass_up_to(t) / m.c + 10.0 * step);
        CHECK(s2.FV[i] >= s1.FV[i] - 1e-8);
      }
      for (const auto& window : s2.residual_history) {
        if (window.size() < 5) continue;
        for (std::size_t k = window.size() - 4; k < window.size(); ++k) CHECK(window[k] < window[k - 1]);
      }
      CHECK(s2.residual <= 1e-10);
    }
  }

  TEST_CASE("Grid convergence is first order or better") {
    double prev = 0.0;
    for (double step : {4e-3, 2e-3, 1e-3}) {
      const VolterraSolution coarse = solve(kExp, "delta:0:1,density:0:1:0.5", step, 2.0);
      const VolterraSolution fine = solve(kExp, "delta:0:1,density:0:1:0.5", step / 2.0, 2.0);
      double d = 0.0;
      for (Index i = 0; i < coarse.V.size(); ++i) d = std::max(d, std::abs(coarse.V[i] - fine.V[2 * i]));
      CHECK(d <= 5.0 * step);
      if (prev > 0.0) CHECK(d <= 0.75 * prev);
      prev = d;
    }
  }

  TEST_CASE("Iteration limit is reported, never silently accepted") {
    VolterraOptions opt;
    opt.max_iterations = 1;
    CHECK_THROWS_AS(solve_V(kExp, scale_table(kExp, 1e-2, 1.0), parse_boundary_measure("delta:0:1"), 1.0, opt),
                    ConvergenceError);
    CHECK_THROWS_AS(solve_V(kExp, scale_table(kRiccati, 1e-2, 1.0), parse_boundary_measure("delta:0:1"), 1.0), UsageError);
    CHECK_THROWS_AS(solve(kExp, "delta:3:1", 1e-2, 1.0), DomainError);
  }

  TEST_CASE("Boundary measure grammar") {
    const auto mu = parse_boundary_measure("delta:2:0.5, density:0:1:0.25,delta:0.5:1");
    REQUIRE(mu.atoms.size() == 2);
    CHECK(mu.atoms[0].location == 0.5);
    CHECK(mu.atoms[1].location == 2.0);
    CHECK(mu.mass_up_to(1.0) == doctest::Approx(1.25));
    CHECK(mu.mass_up_to(2.0) == doctest::Approx(1.75));
    CHECK(mu.density_at(0.3) == 0.25);
    CHECK(mu.first_support() == 0.0);
    CHECK(mu.last_support() == 2.0);
    CHECK(parse_boundary_measure(to_string(mu)).mass_up_to(5.0) == doctest::Approx(1.75));
    CHECK(parse_boundary_measure("").empty());
    CHECK(parse_boundary_measure("zero").empty());
    CHECK_THROWS_AS(parse_boundary_measure("delta:-1:1"), DomainError);
    CHECK_THROWS_AS(parse_boundary_measure("delta:1:0"), DomainError);
    CHECK_THROWS_AS(parse_boundary_measure("density:1:0:1"), DomainError);
    CHECK_THROWS_AS(parse_boundary_measure("spike:1:1"), UsageError);
    CHECK_THROWS(parse_boundary_measure("delta:x:1"));
  }
}
