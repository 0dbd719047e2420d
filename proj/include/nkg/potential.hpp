#pragma once

// Scalar potentials W(|psi|) = F(s), hypothesis checks and the saturation
// construction.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nkg/errors.hpp"

namespace nkg {

/// W and its first two derivatives at one modulus value.
struct PotentialValue {
  double W = 0.0;
  double dW = 0.0;
  double d2W = 0.0;
};

/// R(s) = W(s) - s^2/2 and derivatives.
struct RemainderValue {
  double R = 0.0;
  double dR = 0.0;
  double d2R = 0.0;
};

/// Immutable potential depending on the field modulus only.
class ScalarPotential {
 public:
  using EvalFn = std::function<PotentialValue(double)>;

  ScalarPotential(std::string name, EvalFn eval, std::optional<double> sbar = std::nullopt)
      : name_(std::move(name)),
        eval_(std::make_shared<const EvalFn>(std::move(eval))),
        sbar_(sbar) {}

  PotentialValue operator()(double s) const {
    if (!(s >= 0.0)) throw DomainError("potential evaluated at negative modulus " + std::to_string(s));
    return (*eval_)(s);
  }

  /// W'(s)/s, the factor multiplying psi in W'(psi); the s -> 0 limit is W''(0).
  double dW_over_s(double s) const {
    if (s == 0.0) return (*this)(0.0).d2W;
    return (*this)(s).dW / s;
  }

  /// R'(s)/s with the same convention.
  double dR_over_s(double s) const { return dW_over_s(s) - 1.0; }

  const std::string& name() const { return name_; }
  std::optional<double> sbar() const { return sbar_; }

 private:
  std::string name_;
  std::shared_ptr<const EvalFn> eval_;
  std::optional<double> sbar_;
};

inline PotentialValue eval_potential(const ScalarPotential& pot, double s) { return pot(s); }

inline RemainderValue remainder(const ScalarPotential& pot, double s) {
  const PotentialValue v = pot(s);
  return {v.W - 0.5 * s * s, v.dW - s, v.d2W - 1.0};
}

// ---------------------------------------------------------------------------
// Built-ins

/// W(s) = s^2/2 - s^p/p.
inline ScalarPotential power_potential(double p) {
  if (!(p > 2.0)) throw ArgumentError("power potential needs p > 2");
  std::ostringstream name;
  name << "power(" << p << ")";
  return ScalarPotential(name.str(), [p](double s) {
    const double sp2 = std::pow(s, p - 2.0);
    const double sp = sp2 * s * s;
    return PotentialValue{0.5 * s * s - sp / p, s - sp2 * s, 1.0 - (p - 1.0) * sp2};
  });
}

/// W(s) = s^2 (1 - s)^2 / 2.
inline ScalarPotential double_well_potential() {
  return ScalarPotential("double-well", [](double s) {
    const double a = 1.0 - s;
    return PotentialValue{0.5 * s * s * a * a, s * a * (1.0 - 2.0 * s), 1.0 - 6.0 * s + 6.0 * s * s};
  });
}

/// Linear Klein-Gordon, W(s) = s^2/2.
inline ScalarPotential linear_potential() {
  return ScalarPotential("linear", [](double s) { return PotentialValue{0.5 * s * s, s, 1.0}; });
}

// ---------------------------------------------------------------------------
// Grids and hypothesis checks

/// Log-spaced modulus grid on (lo, hi], `count` points, hi included.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ArgumentError("log_grid: need 0 < lo < hi and count >= 2");
  std::vector<double> s(count);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t j = 0; j < count; ++j) {
    const double e = a + (b - a) * static_cast<double>(j) / static_cast<double>(count - 1);
    s[j] = std::pow(10.0, e);
  }
  s.back() = hi;
  return s;
}

inline std::vector<double> default_hypothesis_grid() { return log_grid(1e-4, 10.0, 4096); }

/// Minimum over the grid of W(s)/(s^2/2); an upper bound for alpha_0.
inline double estimate_alpha0(const ScalarPotential& pot, std::span<const double> s_grid) {
  if (s_grid.empty()) throw ArgumentError("estimate_alpha0: empty grid");
  double best = std::numeric_limits<double>::infinity();
  for (double s : s_grid) {
    if (!(s > 0.0)) throw ArgumentError("estimate_alpha0: grid values must be positive");
    best = std::min(best, pot(s).W / (0.5 * s * s));
  }
  return best;
}

/// Argmin of W(s)/(s^2/2) over the grid.
inline double alpha0_argmin(const ScalarPotential& pot, std::span<const double> s_grid) {
  if (s_grid.empty()) throw ArgumentError("alpha0_argmin: empty grid");
  double best = std::numeric_limits<double>::infinity();
  double arg = s_grid.front();
  for (double s : s_grid) {
    const double r = pot(s).W / (0.5 * s * s);
    if (r < best) {
      best = r;
      arg = s;
    }
  }
  return arg;
}

struct HypothesisReport {
  bool h0_ok = false;
  double W_at_0 = 0.0;
  double dW_at_0 = 0.0;
  double d2W_at_0 = 0.0;

  bool h1_ok = false;
  double alpha0 = 0.0;
  double alpha0_argmin = 0.0;

  bool h2_ok = false;
  double min_W = 0.0;

  bool h3_ok = false;
  double h3_c1 = 0.0;
  double h3_c2 = 0.0;
  double h3_p = 0.0;
  double h3_q = 0.0;

  bool h1prime_ok = false;
  double h1prime_epsilon = 0.0;

  double near_zero_c1 = 0.0;
  double near_zero_delta = 0.1;

  int dimension = 1;
  std::string grid_used;
  std::vector<std::string> notes;

  /// The existence-and-stability hypotheses H0, H1, H2.
  bool admits_solitons() const { return h0_ok && h1_ok && h2_ok; }
};

namespace detail {

// Least-squares slope of log|y| against log x.
inline std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(std::abs(y[i]) > 1e-300)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double den = static_cast<double>(n) * sxx - sx * sx;
  if (den == 0.0) return std::nullopt;
  return (static_cast<double>(n) * sxy - sx * sy) / den;
}

inline double round_half(double v) { return std::round(2.0 * v) / 2.0; }

}  // namespace detail

/// Grid-based check of H0-H3 and H1'. `N` is the spatial dimension.
inline HypothesisReport check_hypotheses(const ScalarPotential& pot, std::span<const double> s_grid, int N,
                                         double delta = 0.1) {
  if (N < 1) throw ArgumentError("check_hypotheses: dimension must be >= 1");
  if (s_grid.size() < 16) throw ArgumentError("check_hypotheses: grid needs at least 16 points");
  std::vector<double> s(s_grid.begin(), s_grid.end());
  std::sort(s.begin(), s.end());
  if (!(s.front() > 0.0)) throw ArgumentError("check_hypotheses: grid values must be positive");

  HypothesisReport rep;
  rep.dimension = N;
  rep.near_zero_delta = delta;
  {
    std::ostringstream g;
    g << s.size() << " points on [" << s.front() << ", " << s.back() << "]";
    rep.grid_used = g.str();
  }
  if (s.back() < 2.0) rep.notes.push_back("grid maximum below 2; checks may be inconclusive");

  // H0
  const PotentialValue zero = pot(0.0);
  rep.W_at_0 = zero.W;
  rep.dW_at_0 = zero.dW;
  rep.d2W_at_0 = zero.d2W;
  rep.h0_ok = std::abs(zero.W) <= 1e-12 && std::abs(zero.dW) <= 1e-12 && std::abs(zero.d2W - 1.0) <= 1e-8;
  if (!rep.h0_ok) rep.notes.push_back("H0: normalization W(0)=W'(0)=0, W''(0)=1 not met");

  // H1
  rep.alpha0 = estimate_alpha0(pot, s);
  rep.alpha0_argmin = alpha0_argmin(pot, s);
  rep.h1_ok = rep.alpha0 < 1.0 - 1e-12;
  if (!rep.h1_ok) rep.notes.push_back("H1: inf W/(s^2/2) is not below 1 on the grid");

  // H2
  rep.min_W = std::numeric_limits<double>::infinity();
  for (double v : s) rep.min_W = std::min(rep.min_W, pot(v).W);
  rep.h2_ok = rep.min_W >= -1e-14;
  if (!rep.h2_ok) rep.notes.push_back("H2: W takes negative values");

  // Near-zero coercivity constant.
  rep.near_zero_c1 = std::numeric_limits<double>::infinity();
  for (double v : s) {
    if (v > delta) break;
    rep.near_zero_c1 = std::min(rep.near_zero_c1, pot(v).W / (0.5 * v * v));
  }

  // Windows: lowest and highest half-decade of the grid.
  const double lo_end = s.front() * std::sqrt(10.0);
  const double hi_start = s.back() / std::sqrt(10.0);
  std::vector<double> xs_lo, d2_lo, mr_lo, xs_hi, d2_hi;
  for (double v : s) {
    const RemainderValue r = remainder(pot, v);
    if (v <= lo_end) {
      xs_lo.push_back(v);
      d2_lo.push_back(r.d2R);
      mr_lo.push_back(-r.R);
    }
    if (v >= hi_start) {
      xs_hi.push_back(v);
      d2_hi.push_back(r.d2R);
    }
  }

  // H3: |R''(s)| <= c1 s^{p-2} + c2 s^{q-2}, 2 < p <= q < 2N/(N-2).
  {
    const auto slope_lo = detail::loglog_slope(xs_lo, d2_lo);
    const auto slope_hi = detail::loglog_slope(xs_hi, d2_hi);
    if (!slope_lo && !slope_hi) {
      // R'' vanishes identically on the grid: the bound holds for any admissible pair.
      rep.h3_p = rep.h3_q = 3.0;
      rep.h3_c1 = rep.h3_c2 = std::numeric_limits<double>::min();
      rep.h3_ok = true;
      rep.notes.push_back("H3: R'' vanishes on the grid");
    } else {
      const double p = 2.0 + detail::round_half(slope_lo.value_or(1.0));
      const double q = std::max(p, 2.0 + detail::round_half(slope_hi.value_or(p - 2.0)));
      rep.h3_p = p;
      rep.h3_q = q;
      double c = 0.0;
      for (double v : s) {
        const double bound = std::pow(v, p - 2.0) + std::pow(v, q - 2.0);
        c = std::max(c, std::abs(remainder(pot, v).d2R) / bound);
      }
      rep.h3_c1 = rep.h3_c2 = std::max(c, std::numeric_limits<double>::min());
      bool ok = p > 2.0 && p <= q && std::isfinite(c);
      if (N >= 3) {
        const double crit = 2.0 * N / (N - 2.0);
        ok = ok && q < crit;
      } else {
        rep.notes.push_back("H3: no upper exponent bound for N <= 2");
      }
      rep.h3_ok = ok;
      if (!ok) rep.notes.push_back("H3: fitted exponents violate 2 < p <= q < 2*");
    }
  }

  // H1': s^2/2 - W(s) >= s^{2+eps} near zero with 0 < eps < 4/N.
  {
    bool positive = !mr_lo.empty();
    for (double m : mr_lo) positive = positive && m > 0.0;
    if (positive) {
      const auto slope = detail::loglog_slope(xs_lo, mr_lo);
      if (slope) {
        rep.h1prime_epsilon = *slope - 2.0;
        rep.h1prime_ok = rep.h1prime_epsilon > 0.0 && rep.h1prime_epsilon < 4.0 / N;
        if (!rep.h1prime_ok) rep.notes.push_back("H1': fitted exponent outside (0, 4/N)");
      }
    } else {
      rep.notes.push_back("H1': s^2/2 - W(s) is not positive near zero");
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Saturation

/// Potential equal to `pot` below `sbar` whose remainder is nondecreasing
/// from `sbar` on. Beyond sbar the slope R~' blends the value max(R'(sbar),0)
/// into the linear ramp (s - sbar) over [sbar, sbar + 1] with a cubic
/// smoothstep. If R' is already nonnegative on [sbar, 20 max(1, sbar)] the
/// original potential is returned unchanged (re-tagged with sbar).
/// W~ is continuous everywhere; W~' is continuous at sbar iff R'(sbar) >= 0.
inline ScalarPotential saturate(const ScalarPotential& pot, double sbar) {
  if (!(sbar > 0.0)) throw ArgumentError("saturate: sbar must be positive");
  const std::string name = "saturate(" + pot.name() + ", " + [&] {
    std::ostringstream o;
    o << sbar;
    return o.str();
  }() + ")";

  bool already_monotone = true;
  const double top = 20.0 * std::max(1.0, sbar);
  for (int j = 0; j <= 4000 && already_monotone; ++j) {
    const double v = sbar + (top - sbar) * j / 4000.0;
    already_monotone = remainder(pot, v).dR >= 0.0;
  }
  if (already_monotone) {
    return ScalarPotential(name, [pot](double v) { return pot(v); }, sbar);
  }

  const RemainderValue at = remainder(pot, sbar);
  const double m = std::max(at.dR, 0.0);
  constexpr double kappa = 1.0;
  const double R0 = at.R;
  return ScalarPotential(
      name,
      [pot, sbar, m, R0](double v) {
        if (v < sbar) return pot(v);
        const double t = v - sbar;
        double R, dR, d2R;
        if (t <= 1.0) {
          const double sigma = 1.0 - 3.0 * t * t + 2.0 * t * t * t;
          const double dsigma = -6.0 * t + 6.0 * t * t;
          const double int_sigma = t - t * t * t + 0.5 * t * t * t * t;
          const double int_sigma_t = 0.5 * t * t - 0.75 * t * t * t * t + 0.4 * t * t * t * t * t;
          R = R0 + m * int_sigma + kappa * (0.5 * t * t - int_sigma_t);
          dR = sigma * m + (1.0 - sigma) * kappa * t;
          d2R = dsigma * m - dsigma * kappa * t + (1.0 - sigma) * kappa;
        } else {
          R = R0 + 0.5 * m + kappa * (0.5 * t * t - 0.15);
          dR = kappa * t;
          d2R = kappa;
        }
        return PotentialValue{0.5 * v * v + R, v + dR, 1.0 + d2R};
      },
      sbar);
}

// ---------------------------------------------------------------------------
// Registry

namespace detail {

inline std::string trim(std::string s) {
  auto ns = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), ns));
  s.erase(std::find_if(s.rbegin(), s.rend(), ns).base(), s.end());
  return s;
}

inline double parse_number(const std::string& text, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ArgumentError("cannot parse number '" + text + "' in " + context);
  }
  if (used != text.size()) throw ArgumentError("trailing characters in number '" + text + "' in " + context);
  return v;
}

}  // namespace detail

/// Builds a potential from a registry spec: `power(p)`, `double-well`,
/// `linear`, or `saturate(<spec>, sbar)`.
inline ScalarPotential parse_potential(const std::string& spec_in) {
  const std::string spec = detail::trim(spec_in);
  if (spec == "double-well") return double_well_potential();
  if (spec == "linear") return linear_potential();
  const auto open = spec.find('(');
  if (open == std::string::npos || spec.back() != ')') throw ArgumentError("unknown potential '" + spec + "'");
  const std::string head = detail::trim(spec.substr(0, open));
  const std::string body = spec.substr(open + 1, spec.size() - open - 2);
  if (head == "power") return power_potential(detail::parse_number(detail::trim(body), spec));
  if (head == "saturate") {
    int depth = 0;
    for (std::size_t i = body.size(); i-- > 0;) {
      if (body[i] == ')') ++depth;
      if (body[i] == '(') --depth;
      if (body[i] == ',' && depth == 0) {
        const ScalarPotential inner = parse_potential(body.substr(0, i));
        return saturate(inner, detail::parse_number(detail::trim(body.substr(i + 1)), spec));
      }
    }
    throw ArgumentError("saturate(...) needs two arguments in '" + spec + "'");
  }
  throw ArgumentError("unknown potential '" + spec + "'");
}

}  // namespace nkg
