#pragma once

// Experiments built on the solvers: the d(omega) curve and its convexity test,
// the charge threshold of the plateau family, existence witnesses for every
// charge, and the dynamical perturbation test.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nkg/dynamics.hpp"
#include "nkg/errors.hpp"
#include "nkg/functionals.hpp"
#include "nkg/groundstate.hpp"
#include "nkg/potential.hpp"

namespace nkg {

struct DispersionRow {
  double omega;
  double charge;
  double energy;
  double d;       ///< E + omega C
  double lambda;  ///< E / |C|
};

struct DispersionTable {
  std::vector<DispersionRow> rows;
  std::vector<double> gaps;  ///< frequencies where no ground state was found
  std::string potential;
  int dimension = 1;
  std::string grid;
};

/// d(omega) = E + omega C along the shooting branch. Existence failures become gaps.
inline DispersionTable d_curve(const ScalarPotential& pot, const std::vector<double>& omegas, const GridPtr& grid,
                               const ShootingOptions& sopts = {}) {
  DispersionTable t;
  t.potential = pot.name();
  t.dimension = grid->dimension();
  t.grid = grid->describe();
  double last = -std::numeric_limits<double>::infinity();
  for (const double om : omegas) {
    if (!(om > 0.0 && om < 1.0)) throw ArgumentError("d_curve: frequencies must lie in (0, 1)");
    if (!(om > last)) throw ArgumentError("d_curve: frequencies must be strictly increasing");
    last = om;
    try {
      const StandingWave sw(shoot_radial(pot, om, grid, sopts), om);
      const double C = charge_Y(sw);
      const double E = energy_Y(sw, pot);
      t.rows.push_back({om, C, E, E + om * C, E / std::abs(C)});
    } catch (const ExistenceError&) {
      t.gaps.push_back(om);
    } catch (const SolverError&) {
      t.gaps.push_back(om);
    }
  }
  return t;
}

inline std::vector<double> omega_range(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ArgumentError("omega_range: need lo <= hi and step > 0");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(lo + step * static_cast<double>(i));
  return out;
}

enum class Verdict { stable, unstable, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    default: return "inconclusive";
  }
}

struct StabilityVerdict {
  double omega0 = 0.0;
  double d_second = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::inconclusive;
  std::string basis;  ///< "convexity" or "dynamics"
  double tolerance = 0.0;
  double epsilon_used = 0.0;
  double horizon_T = 0.0;
  double bound_K = 0.0;
  double max_orbital_distance = std::numeric_limits<double>::quiet_NaN();
};

/// Central second difference of d at omega0; needs two table neighbours on each side.
inline StabilityVerdict convexity_check(const DispersionTable& t, double omega0, double tol = 1e-4) {
  const auto& r = t.rows;
  std::size_t i = r.size();
  for (std::size_t k = 0; k < r.size(); ++k)
    if (std::abs(r[k].omega - omega0) <= 1e-9) i = k;
  if (i == r.size()) throw ArgumentError("convexity_check: omega0 is not a table frequency");
  if (i < 2 || i + 2 >= r.size()) throw ArgumentError("convexity_check: omega0 needs two neighbours on each side");
  const double dl = r[i].omega - r[i - 1].omega;
  const double dr = r[i + 1].omega - r[i].omega;
  if (std::abs(dl - dr) > 1e-9 * std::max(dl, dr))
    throw ArgumentError("convexity_check: non-uniform frequency spacing around omega0");
  StabilityVerdict v;
  v.omega0 = r[i].omega;
  v.basis = "convexity";
  v.tolerance = tol;
  v.d_second = (r[i + 1].d - 2.0 * r[i].d + r[i - 1].d) / (dl * dr);
  v.verdict = v.d_second > tol ? Verdict::stable : (v.d_second < -tol ? Verdict::unstable : Verdict::inconclusive);
  return v;
}

/// First frequency where d'' changes sign (linear interpolation between
/// interior rows), or nullopt.
inline std::optional<double> convexity_flip(const DispersionTable& t) {
  const auto& r = t.rows;
  std::optional<std::pair<double, double>> prev;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    const double dl = r[i].omega - r[i - 1].omega;
    const double dr = r[i + 1].omega - r[i].omega;
    if (std::abs(dl - dr) > 1e-9 * std::max(dl, dr)) {
      prev.reset();
      continue;
    }
    const double d2 = (r[i + 1].d - 2.0 * r[i].d + r[i - 1].d) / (dl * dr);
    if (prev && (prev->second < 0.0) != (d2 < 0.0))
      return prev->first + (r[i].omega - prev->first) * prev->second / (prev->second - d2);
    prev = {r[i].omega, d2};
  }
  return std::nullopt;
}

/// Reference stability window 2 < p < 2 + 4/N for W = s^2/2 - s^p/p.
inline std::pair<double, double> power_stability_window(int N) { return {2.0, 2.0 + 4.0 / N}; }

// ---------------------------------------------------------------------------
// Charge threshold and witnesses

struct ChargeThreshold {
  double C0;      ///< |C(u_R0, omega_R0)|
  double R0;
  double r0;      ///< plateau height
  double omega;   ///< sqrt(alpha(u_R0))
  double lambda;  ///< Lambda(u_R0, omega_R0) = sqrt(alpha)
  double alpha;
};

/// Sweeps the plateau family u_R (height r0 at the minimizer of 2W(s)/s^2) with
/// omega_R = sqrt(alpha(u_R)) and returns the first R with Lambda < 1.
inline ChargeThreshold charge_threshold(const ScalarPotential& pot, const GridPtr& grid, double R_step = 0.5) {
  if (!grid->is_radial()) throw ArgumentError("charge_threshold: radial grid required");
  const double r0 = alpha0_argmin(pot, default_hypothesis_grid());
  for (double R = 0.0; R + 1.0 <= grid->extent() + 1e-12; R += R_step) {
    const Profile p = plateau_profile(r0, R, grid);
    const double a = alpha(p, pot);
    if (!(a > 0.0)) continue;
    const double om = std::sqrt(a);
    const double lam = lambda_ratio(p, om, pot);
    if (lam < 1.0) return {om * mass(p), R, r0, om, lam, a};
  }
  throw HypothesisError("charge_threshold: no plateau with energy/charge ratio below 1 (hypothesis (H1) fails)");
}

struct ChargeWitness {
  StandingWave sw;  ///< (u_R, 1)
  double R;
  double gamma;
  double J;
  double lambda;
};

/// Witness (u_R, 1) of charge C with J(u_R) < 0 from the scaled plateau family.
/// Requires the near-zero hypothesis (H1').
inline ChargeWitness witness_all_charges(const ScalarPotential& pot, double C, const GridPtr& grid, double R_start = 1.0) {
  if (!(C < 0.0)) throw ArgumentError("witness_all_charges: C must be negative");
  if (!grid->is_radial()) throw ArgumentError("witness_all_charges: radial grid required");
  const auto rep = check_hypotheses(pot, default_hypothesis_grid(), grid->dimension());
  if (!rep.h1prime_ok) throw HypothesisError("witness_all_charges: near-zero hypothesis (H1') fails");
  for (double R = R_start; 2.0 * R <= grid->extent() + 1e-12; R *= 1.25) {
    const double gamma = scaled_plateau_gamma_for_charge(C, R, grid, 1.0);
    Profile p = scaled_plateau(gamma, R, grid);
    const double J = functional_J(p, pot);
    if (J < 0.0) {
      StandingWave sw(std::move(p), 1.0);
      const double lam = lambda_ratio(sw, pot);
      return {std::move(sw), R, gamma, J, lam};
    }
  }
  throw ExistenceError("witness_all_charges: J(u_R) stayed nonnegative up to R = r_max/2; enlarge the grid");
}

// ---------------------------------------------------------------------------
// Perturbation experiment

enum class PerturbationKind { bump, phase, kick };

inline PerturbationKind parse_perturbation_kind(const std::string& s) {
  if (s == "bump") return PerturbationKind::bump;
  if (s == "phase") return PerturbationKind::phase;
  if (s == "kick") return PerturbationKind::kick;
  throw ArgumentError("unknown perturbation kind '" + s + "' (bump, phase, kick)");
}

inline const char* to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::bump: return "bump";
    case PerturbationKind::phase: return "phase";
    default: return "kick";
  }
}

/// Adds a fixed-shape perturbation of size eps (||dpsi||_{H1} + ||dpsit||_{L2}):
///   bump:  dpsi  = a exp(-x^2/2)
///   phase: dpsi  = i a u(x) cos(x)
///   kick:  dpsit = a u(x)
inline void perturb(FieldState& st, const std::vector<double>& u, PerturbationKind kind, double eps) {
  const Grid& g = *st.grid;
  const std::size_t n = g.size();
  std::vector<cplx> dpsi(n, 0.0), dpsit(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g.node(i);
    switch (kind) {
      case PerturbationKind::bump: dpsi[i] = std::exp(-0.5 * x * x); break;
      case PerturbationKind::phase: dpsi[i] = cplx(0.0, u[i] * std::cos(x)); break;
      case PerturbationKind::kick: dpsit[i] = u[i]; break;
    }
  }
  if (eps == 0.0) return;
  const double size = perturbation_size(g, dpsi, dpsit);
  if (!(size > 0.0)) throw ArgumentError("perturb: degenerate perturbation shape");
  const double a = eps / size;
  for (std::size_t i = 0; i < n; ++i) {
    st.psi[i] += a * dpsi[i];
    st.psit[i] += a * dpsit[i];
  }
}

struct TrajectoryRow {
  double t, E, C, P, Qdot, distance, V, max_abs;
};

inline TrajectoryRow observe(const FieldState& st, const StandingWave& sw, double m_c, double C,
                             const ScalarPotential& pot) {
  const auto c = conserved(st, pot);
  double mx = 0.0;
  for (const auto& v : st.psi) mx = std::max(mx, std::abs(v));
  const double dE = c.energy - m_c, dC = c.charge - C;
  return {st.time, c.energy, c.charge, c.momentum, c.ergocenter_velocity, orbital_distance(st, sw), dE * dE + dC * dC,
          mx};
}

struct PerturbationOptions {
  double K = 10.0;
  double dt_factor = 0.5;  ///< dt = dt_factor * h
  double sample_dt = 0.5;  ///< spacing of recorded observations
};

struct PerturbationResult {
  StabilityVerdict verdict;
  std::vector<TrajectoryRow> series;
  bool blew_up = false;
  double blow_up_time = 0.0;
};

/// Evolution geometry for a ground state: the mirrored periodic line for N = 1,
/// the ground-state grid itself otherwise.
inline GridPtr default_geometry(const StandingWave& sw) {
  if (sw.profile.grid->dimension() == 1) return mirrored_line_grid(*sw.profile.grid, true);
  return sw.profile.grid;
}

inline PerturbationResult perturbation_experiment(const GroundState& gs, double eps, double T,
                                                  const ScalarPotential& pot, GridPtr geometry,
                                                  PerturbationKind kind, const PerturbationOptions& opts = {}) {
  if (!(eps >= 0.0 && eps < 0.1)) throw ArgumentError("perturbation_experiment: eps must lie in [0, 0.1)");
  if (!(T > 0.0)) throw ArgumentError("perturbation_experiment: horizon must be positive");
  if (!gs.certified) throw ArgumentError("perturbation_experiment: ground state is not certified");
  if (!geometry) geometry = default_geometry(gs.sw);
  FieldState st = embed_standing_wave(gs.sw, 0.0, geometry);
  const double m_c = field_energy(st, pot);
  const double C = field_charge(st);
  perturb(st, sample_profile(gs.sw, *geometry), kind, eps);

  PerturbationResult res;
  auto& v = res.verdict;
  v.omega0 = gs.sw.omega;
  v.basis = "dynamics";
  v.epsilon_used = eps;
  v.horizon_T = T;
  v.bound_K = opts.K;
  v.tolerance = opts.K * eps;

  const double h = geometry->spacing();
  const auto steps = static_cast<long>(std::ceil(T / (opts.dt_factor * h) - 1e-9));
  const double dt = T / static_cast<double>(steps);
  const long every = std::max(1L, static_cast<long>(std::llround(opts.sample_dt / dt)));
  Evolver ev(pot, geometry->kind() == GridKind::line_open ? std::optional<Sponge>(Sponge{}) : std::nullopt);
  double sup = 0.0;
  auto record = [&] {
    res.series.push_back(observe(st, gs.sw, m_c, C, pot));
    sup = std::max(sup, res.series.back().distance);
  };
  record();
  try {
    for (long k = 1; k <= steps; ++k) {
      ev.step(st, dt);
      if (k % every == 0 || k == steps) record();
    }
  } catch (const BlowUpError& e) {
    res.blew_up = true;
    res.blow_up_time = e.time();
  }
  v.max_orbital_distance = res.blew_up ? std::numeric_limits<double>::infinity() : sup;
  v.verdict = (!res.blew_up && sup <= opts.K * eps) ? Verdict::stable : Verdict::unstable;
  return res;
}

}  // namespace nkg
