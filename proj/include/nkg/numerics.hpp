#pragma once

// Small generic numerical kernels: golden-section search, a bracketed
// secant (Illinois) root finder and an embedded Dormand-Prince 5(4)
// integrator for small ODE systems.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <utility>

#include "nkg/errors.hpp"

namespace nkg::numerics {

struct MinimizeResult {
  double x;
  double fx;
  int evaluations;
};

/// Golden-section search for a minimum of a unimodal function on [a, b].
template <class F>
MinimizeResult golden_section(F&& f, double a, double b, double xtol, int max_iter = 200) {
  constexpr double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int evals = 2;
  for (int it = 0; it < max_iter && std::abs(b - a) > xtol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  return fc < fd ? MinimizeResult{c, fc, evals} : MinimizeResult{d, fd, evals};
}

/// Root of g on [a, b] with g(a) g(b) <= 0, by the Illinois variant of the
/// secant/regula-falsi iteration. Stops when |g| <= ftol or the bracket
/// shrinks below xtol.
template <class G>
double illinois_root(G&& g, double a, double b, double ga, double gb, double ftol, double xtol,
                     int max_iter = 100) {
  if (ga * gb > 0.0) throw ArgumentError("illinois_root: endpoints do not bracket a root");
  if (ga == 0.0) return a;
  if (gb == 0.0) return b;
  int side = 0;
  for (int it = 0; it < max_iter; ++it) {
    const double x = (a * gb - b * ga) / (gb - ga);
    const double gx = g(x);
    if (std::abs(gx) <= ftol || std::abs(b - a) <= xtol) return x;
    if (gx * gb > 0.0) {
      b = x;
      gb = gx;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      a = x;
      ga = gx;
      if (side == +1) gb *= 0.5;
      side = +1;
    }
  }
  throw SolverError("illinois_root: no convergence", std::min(std::abs(ga), std::abs(gb)));
}

/// Adaptive Dormand-Prince 5(4) integrator over fixed-size states.
template <std::size_t Dim>
class DormandPrince {
 public:
  using State = std::array<double, Dim>;
  using Rhs = std::function<State(double, const State&)>;

  DormandPrince(Rhs rhs, double rtol, double atol) : rhs_(std::move(rhs)), rtol_(rtol), atol_(atol) {}

  /// Advances (t, y) to t_end. `stop(t, y)` is checked after each accepted
  /// step; returning true ends the integration early and the function
  /// returns false.
  template <class Stop>
  bool advance(double& t, State& y, double t_end, double& h, Stop&& stop) {
    const double dir = t_end >= t ? 1.0 : -1.0;
    if (h <= 0.0) h = 1e-3 * std::abs(t_end - t) + 1e-12;
    int guard = 0;
    while (dir * (t_end - t) > 0.0) {
      if (++guard > 1000000) throw SolverError("DormandPrince: too many steps", 0.0);
      double step = std::min(h, std::abs(t_end - t));
      State y5, err;
      step_once(t, y, dir * step, y5, err);
      double en = 0.0;
      for (std::size_t i = 0; i < Dim; ++i) {
        const double sc = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(y5[i]));
        en = std::max(en, std::abs(err[i]) / sc);
      }
      if (!std::isfinite(en)) en = 1e10;
      if (en <= 1.0) {
        t += dir * step;
        y = y5;
        if (std::abs(t_end - t) < 1e-14 * std::max(1.0, std::abs(t_end))) t = t_end;
        if (stop(t, y)) return false;
      }
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h = step * fac;
      if (h < 1e-14) throw SolverError("DormandPrince: step size underflow", en);
    }
    return true;
  }

 private:
  void step_once(double t, const State& y, double h, State& y5, State& err) const {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    auto comb = [&](std::initializer_list<std::pair<double, const State*>> terms) {
      State out = y;
      for (const auto& [c, k] : terms)
        for (std::size_t i = 0; i < Dim; ++i) out[i] += h * c * (*k)[i];
      return out;
    };
    const State k1 = rhs_(t, y);
    const State k2 = rhs_(t + c2 * h, comb({{a21, &k1}}));
    const State k3 = rhs_(t + c3 * h, comb({{a31, &k1}, {a32, &k2}}));
    const State k4 = rhs_(t + c4 * h, comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = rhs_(t + c5 * h, comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 = rhs_(t + h, comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    y5 = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = rhs_(t + h, y5);
    for (std::size_t i = 0; i < Dim; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
  }

  Rhs rhs_;
  double rtol_;
  double atol_;
};

}  // namespace nkg::numerics
