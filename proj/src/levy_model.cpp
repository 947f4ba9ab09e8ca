#include "levylt/levy_model.hpp"

#include "levylt/error.hpp"
#include "levylt/text.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace levylt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Upper incomplete gamma Γ(a, x) for a ∈ (-2, 1], x > 0. Boost only covers a > 0, so negative
// orders go through Γ(a, x) = (Γ(a+1, x) - x^a e^{-x}) / a.
double upper_gamma(double a, double x) {
  if (a > 0.0) return boost::math::tgamma(a, x);
  if (std::abs(a) < 1e-12) return boost::math::expint(1, x);
  return (upper_gamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

double tempered_tail(const TemperedPowerJumps& t, int order, double y) {
  const double a = t.index, lam = t.tempering, C = t.scale;
  if (y <= 0.0) {
    // T_k(0) = C λ^{α-k} Γ(k-α)/k!, finite iff k > α.
    if (static_cast<double>(order) <= a) return kInf;
    double fact = 1.0;
    for (int k = 2; k <= order; ++k) fact *= k;
    return C * std::pow(lam, a - order) * std::tgamma(order - a) / fact;
  }
  const double x = lam * y;
  switch (order) {
    case 0:
      return C * std::pow(lam, a) * upper_gamma(-a, x);
    case 1:
      return C * (std::pow(lam, a - 1.0) * upper_gamma(1.0 - a, x) - y * std::pow(lam, a) * upper_gamma(-a, x));
    default: {
      // e^{-λy} ∫_0^∞ w^k/k! (y+w)^{-1-α} e^{-λw} dw; smooth for y > 0.
      double fact = 1.0;
      for (int k = 2; k <= order; ++k) fact *= k;
      boost::math::quadrature::exp_sinh<double> integrator;
      const double val = integrator.integrate(
          [&](double w) {
            if (!(w > 0.0)) return 0.0;
            return std::exp(order * std::log(w) - (1.0 + a) * std::log(y + w) - lam * w);
          },
          0.0, kInf, 1e-13);
      return C * std::exp(-x) * val / fact;
    }
  }
}

double atomic_tail(const AtomicJumps& j, int order, double y) {
  double fact = 1.0;
  for (int k = 2; k <= order; ++k) fact *= k;
  double s = 0.0;
  for (const auto& atom : j.atoms) {
    if (atom.location >= y) s += atom.weight * std::pow(atom.location - y, order) / fact;
  }
  return s;
}

double parse_double(const std::string& key, const std::string& text) {
  return parse_number(text, "model key '" + key + "'");
}

// Inverts a strictly decreasing positive function: finds v ≥ 0 with g(v) = target, g(0) > target.
template <class G>
double invert_decreasing(G&& g, double target, double scale) {
  auto f = [&](double v) { return std::log(g(v)) - std::log(target); };
  double lo = 0.0, hi = scale;
  int guard = 0;
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 200) throw UnsupportedError("inverse-tail bracket failure");
  }
  std::uintmax_t iters = 200;
  auto tol = [](double l, double h) { return std::abs(h - l) <= 1e-13 * std::max(1.0, std::abs(h)); };
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace

double laplace_exponent(const LevyModel& model, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("laplace_exponent: λ must be non-negative");
  const double base = model.b * lambda + model.c * lambda * lambda;
  const double jump = std::visit(
      overloaded{
          [](const ZeroJumps&) { return 0.0; },
          [&](const ExponentialJumps& e) {
            const double lm = lambda * e.mean;
            return e.rate * lm * lm / (1.0 + lm);
          },
          [&](const AtomicJumps& a) {
            double s = 0.0;
            for (const auto& atom : a.atoms) {
              const double z = lambda * atom.location;
              s += atom.weight * (std::expm1(-z) + z);
            }
            return s;
          },
          [&](const TemperedPowerJumps& t) {
            const double lt = t.tempering, al = t.index, r = lambda / lt;
            if (std::abs(al - 1.0) < 1e-12) return t.scale * ((lt + lambda) * std::log1p(r) - lambda);
            return t.scale * std::tgamma(-al) * std::pow(lt, al) * (std::expm1(al * std::log1p(r)) - al * r);
          }},
      model.jumps);
  return base + jump;
}

double laplace_exponent_derivative(const LevyModel& model, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("laplace_exponent_derivative: λ must be non-negative");
  const double base = model.b + 2.0 * model.c * lambda;
  const double jump = std::visit(
      overloaded{
          [](const ZeroJumps&) { return 0.0; },
          [&](const ExponentialJumps& e) {
            const double lm = lambda * e.mean;
            return e.rate * e.mean * lm * (2.0 + lm) / ((1.0 + lm) * (1.0 + lm));
          },
          [&](const AtomicJumps& a) {
            double s = 0.0;
            for (const auto& atom : a.atoms) s -= atom.weight * atom.location * std::expm1(-lambda * atom.location);
            return s;
          },
          [&](const TemperedPowerJumps& t) {
            const double lt = t.tempering, al = t.index, r = lambda / lt;
            if (std::abs(al - 1.0) < 1e-12) return t.scale * std::log1p(r);
            return t.scale * std::tgamma(-al) * al * std::pow(lt, al - 1.0) * std::expm1((al - 1.0) * std::log1p(r));
          }},
      model.jumps);
  return base + jump;
}

Tails tail_functions(const LevyModel& model, double y) {
  if (!(y > 0.0)) throw DomainError("tail_functions: y must be strictly positive");
  return {integrated_tail(model.jumps, 0, y), integrated_tail(model.jumps, 1, y)};
}

double integrated_tail(const JumpMeasure& jumps, int order, double y) {
  if (order < 0 || order > 3) throw UsageError("integrated_tail: order must be in 0..3");
  if (y < 0.0) throw DomainError("integrated_tail: y must be non-negative");
  return std::visit(overloaded{[](const ZeroJumps&) { return 0.0; },
                               [&](const ExponentialJumps& e) {
                                 return e.rate * std::pow(e.mean, order) * std::exp(-y / e.mean);
                               },
                               [&](const AtomicJumps& a) { return atomic_tail(a, order, y); },
                               [&](const TemperedPowerJumps& t) { return tempered_tail(t, order, y); }},
                    jumps);
}

bool finite_activity(const JumpMeasure& jumps) { return !std::holds_alternative<TemperedPowerJumps>(jumps); }

bool has_jumps(const JumpMeasure& jumps) {
  if (std::holds_alternative<ZeroJumps>(jumps)) return false;
  if (const auto* a = std::get_if<AtomicJumps>(&jumps)) return !a->atoms.empty();
  return true;
}

CellMoments tail_cell_moments(const JumpMeasure& jumps, int order, double a, double h) {
  if (order < 0 || order > 1) throw UsageError("tail_cell_moments: order must be 0 or 1");
  if (a < 0.0 || !(h > 0.0)) throw DomainError("tail_cell_moments: invalid cell");
  return std::visit(
      overloaded{
          [](const ZeroJumps&) { return CellMoments{0.0, 0.0}; },
          [&](const ExponentialJumps& e) {
            const double m = e.mean, r = h / m;
            const double scale = e.rate * std::pow(m, order + 1) * std::exp(-a / m);
            const double one_minus = -std::expm1(-r);
            return CellMoments{scale * one_minus, scale * (one_minus / r - std::exp(-r))};
          },
          [&](const AtomicJumps& j) {
            CellMoments out{0.0, 0.0};
            for (const auto& atom : j.atoms) {
              const double d = atom.location - a;
              if (d <= 0.0) continue;
              const double len = std::min(d, h);
              if (order == 0) {
                out.mass += atom.weight * len;
                out.first += atom.weight * len * len / (2.0 * h);
              } else {
                out.mass += atom.weight * (d * len - 0.5 * len * len);
                out.first += atom.weight * (d * len * len / 2.0 - len * len * len / 3.0) / h;
              }
            }
            return out;
          },
          [&](const TemperedPowerJumps& t) {
            auto T = [&](double u) { return tempered_tail(t, order, u); };
            if (a > 0.0) {
              // The cell sits at least one width away from 0, where T is smooth enough for a fixed rule.
              using rule = boost::math::quadrature::gauss<double, 20>;
              const auto& nodes = rule::abscissa();
              const auto& weights = rule::weights();
              CellMoments out{0.0, 0.0};
              for (std::size_t k = 0; k < nodes.size(); ++k) {
                for (double sign : {-1.0, 1.0}) {
                  if (k == 0 && sign > 0.0 && nodes[0] == 0.0) continue;
                  const double s01 = 0.5 * (1.0 + sign * nodes[k]);
                  const double v = weights[k] * T(a + s01 * h);
                  out.mass += v;
                  out.first += s01 * v;
                }
              }
              out.mass *= 0.5 * h;
              out.first *= 0.5 * h;
              return out;
            }
            // Cell touching the singularity at 0, where T_order(u) ~ u^{order-α}. Integrate by parts with
            // T_k' = -T_{k-1}; every boundary term at 0 vanishes and T_{order+2}(0) is always finite.
            const double upper = tempered_tail(t, order + 1, h);
            const double first = (tempered_tail(t, order + 2, 0.0) - tempered_tail(t, order + 2, h)) / h - upper;
            const double mass = tempered_tail(t, order + 1, 0.0) - upper;
            return CellMoments{mass, first};
          }},
      jumps);
}

std::vector<std::string> validate(const LevyModel& model) {
  std::vector<std::string> out;
  if (!std::isfinite(model.b) || model.b < 0.0) out.emplace_back("negative drift: b must be >= 0");
  if (!std::isfinite(model.c) || !(model.c > 0.0)) out.emplace_back("c must be strictly positive");
  std::visit(overloaded{[](const ZeroJumps&) {},
                        [&](const ExponentialJumps& e) {
                          if (!(e.rate > 0.0) || !std::isfinite(e.rate)) out.emplace_back("exponential: rate must be > 0");
                          if (!(e.mean > 0.0) || !std::isfinite(e.mean)) out.emplace_back("exponential: mean must be > 0");
                        },
                        [&](const AtomicJumps& a) {
                          for (const auto& atom : a.atoms) {
                            if (!(atom.weight > 0.0) || !std::isfinite(atom.weight))
                              out.emplace_back("atomic: weights must be > 0");
                            if (!(atom.location > 0.0) || !std::isfinite(atom.location))
                              out.emplace_back("atomic: locations must be > 0");
                          }
                        },
                        [&](const TemperedPowerJumps& t) {
                          if (!(t.scale > 0.0)) out.emplace_back("tempered: scale must be > 0");
                          if (!(t.index > 0.0 && t.index < 2.0)) out.emplace_back("tempered: index must lie in (0,2)");
                          if (!(t.tempering > 0.0)) out.emplace_back("tempered: tempering must be > 0");
                        }},
             model.jumps);
  return out;
}

void require_valid(const LevyModel& model) {
  const auto v = validate(model);
  if (v.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& s : v) msg += " " + s + ";";
  throw ParameterError(msg);
}

std::map<std::string, std::string> model_to_keys(const LevyModel& model) {
  std::map<std::string, std::string> k;
  k["b"] = fmt17(model.b);
  k["c"] = fmt17(model.c);
  std::visit(overloaded{[&](const ZeroJumps&) { k["family"] = "zero"; },
                        [&](const ExponentialJumps& e) {
                          k["family"] = "exponential";
                          k["rate"] = fmt17(e.rate);
                          k["mean"] = fmt17(e.mean);
                        },
                        [&](const AtomicJumps& a) {
                          k["family"] = "atomic";
                          std::string s;
                          for (const auto& atom : a.atoms) {
                            if (!s.empty()) s += ",";
                            s += fmt17(atom.weight) + "@" + fmt17(atom.location);
                          }
                          k["atoms"] = s;
                        },
                        [&](const TemperedPowerJumps& t) {
                          k["family"] = "tempered";
                          k["scale"] = fmt17(t.scale);
                          k["index"] = fmt17(t.index);
                          k["tempering"] = fmt17(t.tempering);
                        }},
             model.jumps);
  return k;
}

std::string fingerprint(const LevyModel& model) {
  std::string out;
  for (const auto& [key, value] : model_to_keys(model)) out += key + "=" + value + ";";
  return out;
}

LevyModel model_from_keys(const std::map<std::string, std::string>& keys) {
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParameterError("model block is missing '" + key + "'");
    return it->second;
  };
  const auto family_it = keys.find("family");
  const std::string family = family_it == keys.end() ? std::string("zero") : family_it->second;

  std::vector<std::string> allowed{"family", "b", "c"};
  LevyModel m;
  m.c = parse_double("c", get("c"));
  m.b = keys.count("b") ? parse_double("b", keys.at("b")) : 0.0;
  if (family == "zero") {
    m.jumps = ZeroJumps{};
  } else if (family == "exponential") {
    m.jumps = ExponentialJumps{parse_double("rate", get("rate")), parse_double("mean", get("mean"))};
    allowed.insert(allowed.end(), {"rate", "mean"});
  } else if (family == "atomic") {
    AtomicJumps a;
    std::stringstream ss(get("atoms"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      const auto at = item.find('@');
      if (at == std::string::npos) throw UsageError("model key 'atoms': expected weight@location, got '" + item + "'");
      a.atoms.push_back({parse_double("atoms", trim(item.substr(0, at))), parse_double("atoms", trim(item.substr(at + 1)))});
    }
    m.jumps = a;
    allowed.emplace_back("atoms");
  } else if (family == "tempered") {
    m.jumps = TemperedPowerJumps{parse_double("scale", get("scale")), parse_double("index", get("index")),
                                 parse_double("tempering", get("tempering"))};
    allowed.insert(allowed.end(), {"scale", "index", "tempering"});
  } else {
    throw UsageError("unknown jump family '" + family + "'");
  }
  for (const auto& [key, value] : keys) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw UsageError("unknown key 'model." + key + "' for family " + family);
  }
  return m;
}

double sample_conditional_jump(const JumpMeasure& jumps, double eta, Rng& rng) {
  return std::visit(
      overloaded{
          [](const ZeroJumps&) -> double { throw UnsupportedError("no jumps to sample"); },
          [&](const ExponentialJumps& e) { return exponential(rng, e.mean); },
          [&](const AtomicJumps& a) {
            double total = 0.0;
            for (const auto& atom : a.atoms)
              if (atom.location >= eta) total += atom.weight;
            if (!(total > 0.0)) throw UnsupportedError("no atoms beyond the truncation level");
            double u = uniform01(rng) * total;
            for (const auto& atom : a.atoms) {
              if (atom.location < eta) continue;
              if (u < atom.weight) return atom.location - eta;
              u -= atom.weight;
            }
            return a.atoms.back().location - eta;
          },
          [&](const TemperedPowerJumps& t) {
            if (!(eta > 0.0)) throw UnsupportedError("tempered jumps need a positive truncation level");
            const double top = tempered_tail(t, 0, eta);
            double u = uniform01(rng);
            while (u <= 0.0) u = uniform01(rng);
            return invert_decreasing([&](double v) { return tempered_tail(t, 0, eta + v); }, u * top,
                                     std::max(eta, 1.0 / t.tempering));
          }},
      jumps);
}

double sample_integrated_tail_overshoot(const JumpMeasure& jumps, double eta, Rng& rng) {
  return std::visit(
      overloaded{
          [](const ZeroJumps&) -> double { throw UnsupportedError("no jumps to sample"); },
          [&](const ExponentialJumps& e) { return exponential(rng, e.mean); },
          [&](const AtomicJumps& a) {
            double total = 0.0;
            for (const auto& atom : a.atoms) total += atom.weight * std::max(atom.location - eta, 0.0);
            if (!(total > 0.0)) throw UnsupportedError("no atoms beyond the truncation level");
            double u = uniform01(rng) * total;
            for (const auto& atom : a.atoms) {
              const double span = std::max(atom.location - eta, 0.0);
              const double w = atom.weight * span;
              if (w <= 0.0) continue;
              if (u < w) return span * uniform01(rng);
              u -= w;
            }
            return std::max(a.atoms.back().location - eta, 0.0) * uniform01(rng);
          },
          [&](const TemperedPowerJumps& t) {
            const double top = tempered_tail(t, 1, eta);
            if (!std::isfinite(top)) throw UnsupportedError("integrated tail is infinite at the truncation level");
            double u = uniform01(rng);
            while (u <= 0.0) u = uniform01(rng);
            return invert_decreasing([&](double v) { return tempered_tail(t, 1, eta + v); }, u * top,
                                     std::max(eta, 1.0 / t.tempering));
          }},
      jumps);
}

}  // namespace levylt
