#pragma once

// Ground states: projected gradient flow for J on the mass sphere, radial
// shooting for the static equation, the outer charge-matching solve and
// residual certification.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nkg/errors.hpp"
#include "nkg/functionals.hpp"
#include "nkg/grid.hpp"
#include "nkg/numerics.hpp"
#include "nkg/potential.hpp"

namespace nkg {

struct SphereSolveOptions {
  double tol = 1e-9;           ///< Euler-Lagrange residual (L2) for convergence.
  int max_iter = 200000;
  double initial_step = 1e-2;  ///< First step size of the flow.
  double gaussian_width = 2.0; ///< Width of the default Gaussian seed.
  std::optional<Profile> seed; ///< Alternative initial profile (rescaled to the sphere).
  bool record_history = false; ///< Keep J after every accepted iteration.
  /// Precondition the L2 gradient with (-Lap + 1)^{-1} (a Sobolev gradient).
  /// The plain L2 flow is much slower on fine grids.
  bool preconditioned = true;
  /// Return instead of throwing when the iteration cap is hit.
  bool allow_unconverged = false;
};

struct SphereSolveResult {
  Profile profile;
  double mu = 0.0;       ///< Multiplier of  -Lap u + R'(u) = mu u.
  double J_value = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  /// J did not become negative: the flow spread out instead of concentrating.
  bool dispersive_warning = false;
  std::vector<double> J_history;
};

namespace detail {

// r = -Lap u + R'(u) - mu u with mu the Rayleigh quotient; returns (mu, ||r||).
inline std::pair<double, double> sphere_gradient(const Grid& g, std::span<const double> u,
                                                 const ScalarPotential& pot, double rho, std::vector<double>& lap,
                                                 std::vector<double>& r) {
  g.laplacian<double>(u, lap);
  double num = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    r[i] = -lap[i] + remainder(pot, u[i]).dR;
    num += g.weight(i) * r[i] * u[i];
  }
  const double mu = num / rho;
  double res2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    r[i] -= mu * u[i];
    res2 += g.weight(i) * r[i] * r[i];
  }
  return {mu, std::sqrt(res2)};
}

// Solves (K + W) z = b for the radial stiffness K and diagonal weights W,
// i.e. (-Lap + 1) z = b / w in the weighted sense.
inline void solve_shifted_stiffness(const Grid& g, std::span<const double> b, std::vector<double>& z,
                                    std::vector<double>& diag, std::vector<double>& rhs) {
  const std::size_t n = g.size();
  diag.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) diag[i] = g.weight(i);
  for (std::size_t e = 0; e + 1 < n; ++e) {
    diag[e] += g.edge_coefficient(e);
    diag[e + 1] += g.edge_coefficient(e);
  }
  rhs.assign(b.begin(), b.end());
  // Thomas algorithm; off-diagonals are -c_e.
  for (std::size_t i = 1; i < n; ++i) {
    const double off = -g.edge_coefficient(i - 1);
    const double m = off / diag[i - 1];
    diag[i] -= m * off;
    rhs[i] -= m * rhs[i - 1];
  }
  z.resize(n);
  z[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) z[i] = (rhs[i] + g.edge_coefficient(i) * z[i + 1]) / diag[i];
}

inline void project_to_sphere(const Grid& g, std::vector<double>& u, double rho) {
  for (double& v : u) v = std::max(v, 0.0);
  const double m = mass(g, u);
  if (!(m > 0.0)) throw SolverError("projection onto the mass sphere from the zero profile", 0.0);
  const double s = std::sqrt(rho / m);
  for (double& v : u) v *= s;
}

}  // namespace detail

/// Minimizes J(u) = int((1/2)|u'|^2 + R(u)) over nonnegative u with
/// int u^2 = rho by projected gradient descent (Barzilai-Borwein steps with
/// backtracking, so J decreases monotonically).
inline SphereSolveResult minimize_J_on_sphere(const ScalarPotential& pot, double rho, const GridPtr& grid,
                                              const SphereSolveOptions& opts = {}) {
  if (!(rho > 0.0)) throw ArgumentError("minimize_J_on_sphere: rho must be positive");
  if (!grid->is_radial()) throw ArgumentError("minimize_J_on_sphere: radial grid required");
  const Grid& g = *grid;
  const std::size_t n = g.size();

  std::vector<double> u(n);
  if (opts.seed) {
    if (!opts.seed->grid->same_layout(g)) throw ArgumentError("minimize_J_on_sphere: seed grid mismatch");
    u = opts.seed->u;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = g.node(i) / opts.gaussian_width;
      u[i] = std::exp(-x * x);
    }
  }
  detail::project_to_sphere(g, u, rho);

  std::vector<double> lap(n), r(n), r_new(n), d(n), d_new(n), u_new(n), wr(n), diag, rhs;
  // Search direction: r itself, or the preconditioned and re-projected z.
  auto direction = [&](const std::vector<double>& res_vec, const std::vector<double>& uu, std::vector<double>& dir) {
    if (!opts.preconditioned) {
      dir = res_vec;
      return;
    }
    for (std::size_t i = 0; i < n; ++i) wr[i] = g.weight(i) * res_vec[i];
    detail::solve_shifted_stiffness(g, wr, dir, diag, rhs);
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += g.weight(i) * dir[i] * uu[i];
    c /= rho;
    for (std::size_t i = 0; i < n; ++i) dir[i] -= c * uu[i];
  };
  auto [mu, res] = detail::sphere_gradient(g, u, pot, rho, lap, r);
  direction(r, u, d);
  double J = functional_J(g, u, pot);

  SphereSolveResult out;
  if (opts.record_history) out.J_history.push_back(J);
  double tau = opts.initial_step;
  int it = 0;
  for (; it < opts.max_iter && res > opts.tol; ++it) {
    double dnorm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) dnorm2 += g.weight(i) * r[i] * d[i];
    double J_new = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) u_new[i] = u[i] - tau * d[i];
      detail::project_to_sphere(g, u_new, rho);
      J_new = functional_J(g, u_new, pot);
      const double wanted = 1e-4 * tau * dnorm2;
      // Below the rounding level of J only non-increase can be demanded.
      const double floor = 1e-14 * std::max(std::abs(J), 1e-300);
      if (J_new <= J - wanted || (wanted < floor && J_new <= J + floor)) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) break;
    auto [mu_new, res_new] = detail::sphere_gradient(g, u_new, pot, rho, lap, r_new);
    direction(r_new, u_new, d_new);
    // Barzilai-Borwein step in the metric of the preconditioner.
    std::vector<double>& s_vec = wr;
    for (std::size_t i = 0; i < n; ++i) s_vec[i] = u_new[i] - u[i];
    double ss = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ss += g.weight(i) * s_vec[i] * s_vec[i];
      sy += g.weight(i) * s_vec[i] * (r_new[i] - r[i]);
    }
    if (opts.preconditioned) ss += g.gradient_norm2<double>(s_vec);
    tau = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e6) : std::min(2.0 * tau, 1e6);
    u.swap(u_new);
    r.swap(r_new);
    d.swap(d_new);
    mu = mu_new;
    res = res_new;
    J = J_new;
    if (opts.record_history) out.J_history.push_back(J);
  }

  out.profile = Profile(grid, std::move(u));
  out.mu = mu;
  out.J_value = J;
  out.iterations = it;
  out.residual = res;
  out.converged = res <= opts.tol;
  out.dispersive_warning = !(J < 0.0);
  if (!out.converged && !out.dispersive_warning && !opts.allow_unconverged) {
    throw SolverError("minimize_J_on_sphere: no convergence within " + std::to_string(it) + " iterations", res);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shooting

struct ShootingOptions {
  double bracket_lo = 1e-6;
  double bracket_hi = 10.0;
  int scan_points = 400;
  double bisection_tol = 1e-12;
  double rtol = 1e-12;
  double atol = 1e-14;
};

namespace detail {

enum class ShotOutcome { undershoot, overshoot };

struct Shot {
  ShotOutcome outcome;
  std::vector<double> u;  // values at grid nodes until the trajectory stops
};

// Integrates -u'' - ((N-1)/r) u' + W'(u) = omega^2 u from u(0) = a, u'(0) = 0.
inline Shot shoot_once(const ScalarPotential& pot, double omega, const Grid& g, double a,
                       const ShootingOptions& opts, bool record) {
  const int N = g.dimension();
  const double w2 = omega * omega;
  const double k = std::sqrt(std::max(1.0 - w2, 0.0));
  auto force = [&](double v) {
    const double s = std::abs(v);
    return pot.dW_over_s(s) * v;
  };
  using DP = numerics::DormandPrince<2>;
  DP dp(
      [&](double r, const DP::State& y) -> DP::State {
        const double friction = N > 1 ? (N - 1) / r * y[1] : 0.0;
        return {y[1], -friction + force(y[0]) - w2 * y[0]};
      },
      opts.rtol, opts.atol);

  Shot shot{ShotOutcome::overshoot, {}};
  if (record) shot.u.reserve(g.size());

  double r = 0.0;
  DP::State y{a, 0.0};
  if (N > 1) {
    // Series start away from the coordinate singularity.
    r = 1e-5;
    const double c = (force(a) - w2 * a) / N;
    y = {a + 0.5 * c * r * r, c * r};
  }
  if (record) shot.u.push_back(a);

  std::optional<ShotOutcome> event;
  auto stop = [&](double, const DP::State& s) {
    if (s[0] < 0.0) event = ShotOutcome::overshoot;
    else if (s[1] > 0.0 || s[0] > 1e6) event = ShotOutcome::undershoot;
    return event.has_value();
  };
  double h = 1e-3;
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!dp.advance(r, y, g.node(i), h, stop)) break;
    if (record) shot.u.push_back(y[0]);
  }
  if (event) {
    shot.outcome = *event;
  } else {
    // Reached the end of the grid still decaying: the growing mode decides.
    shot.outcome = y[1] + k * y[0] > 0.0 ? ShotOutcome::undershoot : ShotOutcome::overshoot;
  }
  return shot;
}

}  // namespace detail

/// Positive decaying solution of -u'' - ((N-1)/r)u' + W'(u) = omega^2 u with
/// u'(0) = 0, found by bisection on u(0) between an undershooting and an
/// overshooting initial value.
inline Profile shoot_radial(const ScalarPotential& pot, double omega, const GridPtr& grid,
                            const ShootingOptions& opts = {}) {
  if (!(omega > 0.0 && omega < 1.0)) throw ArgumentError("shoot_radial: omega must lie in (0, 1)");
  if (!grid->is_radial()) throw ArgumentError("shoot_radial: radial grid required");
  const Grid& g = *grid;
  using detail::ShotOutcome;

  // Scan for the lowest undershoot -> overshoot transition.
  std::optional<std::pair<double, double>> bracket;
  const double ratio = std::pow(opts.bracket_hi / opts.bracket_lo, 1.0 / (opts.scan_points - 1));
  std::vector<double> scan;
  for (int j = 0; j < opts.scan_points; ++j) scan.push_back(opts.bracket_lo * std::pow(ratio, j));
  // Near the saturation threshold the overshoot window is a narrow interval
  // around sbar, where the effective potential has its kink.
  if (const auto sbar = pot.sbar(); sbar && *sbar > opts.bracket_lo && *sbar < opts.bracket_hi) {
    scan.push_back(*sbar * (1.0 - 1e-9));
    std::sort(scan.begin(), scan.end());
  }
  double prev_a = scan.front();
  ShotOutcome prev = detail::shoot_once(pot, omega, g, prev_a, opts, false).outcome;
  for (std::size_t j = 1; j < scan.size() && !bracket; ++j) {
    const double a = scan[j];
    const ShotOutcome cur = detail::shoot_once(pot, omega, g, a, opts, false).outcome;
    if (prev == ShotOutcome::undershoot && cur == ShotOutcome::overshoot) bracket = {{prev_a, a}};
    prev = cur;
    prev_a = a;
  }
  if (!bracket) {
    throw ExistenceError("shoot_radial: no ground state detected for " + pot.name() +
                         " at omega=" + std::to_string(omega) + " (no undershoot/overshoot transition)");
  }

  double lo = bracket->first, hi = bracket->second;
  while (hi - lo > opts.bisection_tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (detail::shoot_once(pot, omega, g, mid, opts, false).outcome == ShotOutcome::undershoot) lo = mid;
    else hi = mid;
  }

  const auto under = detail::shoot_once(pot, omega, g, lo, opts, true);
  const auto over = detail::shoot_once(pot, omega, g, hi, opts, true);
  const std::size_t n = g.size();
  const double peak = 0.5 * (lo + hi);
  // Keep the part where both trajectories agree and decay; continue with
  // the linearized tail beyond.
  std::size_t cut = std::min(under.u.size(), over.u.size());
  for (std::size_t i = 1; i < cut; ++i) {
    const bool diverged = std::abs(under.u[i] - over.u[i]) > 1e-9 * peak;
    const bool rising = under.u[i] > under.u[i - 1] || over.u[i] <= 0.0;
    if (diverged || rising) {
      cut = i;
      break;
    }
  }
  if (cut < 2) throw ExistenceError("shoot_radial: shooting trajectories diverge at the origin");
  std::vector<double> u(n, 0.0);
  for (std::size_t i = 0; i < cut; ++i) u[i] = 0.5 * (under.u[i] + over.u[i]);
  const double k = std::sqrt(1.0 - omega * omega);
  const double rc = g.node(cut - 1);
  const double uc = u[cut - 1];
  const int N = g.dimension();
  for (std::size_t i = cut; i < n; ++i) {
    const double r = g.node(i);
    double tail = uc * std::exp(-k * (r - rc));
    if (N > 1 && rc > 0.0) tail *= std::pow(rc / r, 0.5 * (N - 1));
    u[i] = tail;
  }
  return Profile(grid, std::move(u));
}

// ---------------------------------------------------------------------------
// Residuals and certification

struct StaticResidual {
  double residual = 0.0;     ///< || -Lap u + W'(u) - omega^2 u ||_{L2}
  double lambda_hat = 0.0;   ///< <dE/du, dC/du> / ||dC/du||^2; NaN for the zero profile.
};

inline StaticResidual residual_static(const StandingWave& sw, const ScalarPotential& pot) {
  validate_profile(sw.profile);
  const Grid& g = *sw.profile.grid;
  const auto& u = sw.profile.u;
  const double w2 = sw.omega * sw.omega;
  const std::vector<double> lap = g.laplacian<double>(u);
  double res2 = 0.0, dot = 0.0, rho = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double base = -lap[i] + pot(u[i]).dW;
    const double r = base - w2 * u[i];
    res2 += g.weight(i) * r * r;
    // dE/du = base + omega^2 u, dC/du = -2 omega u.
    dot += g.weight(i) * (base + w2 * u[i]) * (-2.0 * sw.omega * u[i]);
    rho += g.weight(i) * u[i] * u[i];
  }
  StaticResidual out;
  out.residual = std::sqrt(res2);
  out.lambda_hat = rho > 0.0 ? dot / (4.0 * w2 * rho) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

/// True iff max u <= sbar + tol.
inline bool maximum_principle_check(const StandingWave& sw, double sbar, double tol = 1e-6) {
  return sw.profile.max() <= sbar + tol;
}

struct GroundState {
  StandingWave sw;
  double charge = 0.0;
  double energy = 0.0;
  double lambda_multiplier = 0.0;  ///< Estimated multiplier; -omega for a true critical point.
  double residual = 0.0;
  double lambda_ratio = 0.0;       ///< E/|C|
  double J_value = 0.0;
  double mu = 0.0;
  bool certified = false;
  std::vector<std::string> warnings;
};

struct CertifyOptions {
  double residual_tol = 1e-4;    ///< Relative to max(1, ||u||_{L2}).
  double multiplier_tol = 1e-3;  ///< |lambda_hat + omega|.
};

namespace detail {

inline void certify(GroundState& gs, const ScalarPotential& pot, const CertifyOptions& copts) {
  const StaticResidual sr = residual_static(gs.sw, pot);
  gs.residual = sr.residual;
  gs.lambda_multiplier = sr.lambda_hat;
  const double scale = std::max(1.0, std::sqrt(mass(gs.sw.profile)));
  bool ok = gs.sw.profile.max() > 0.0;
  ok = ok && sr.residual <= copts.residual_tol * scale;
  ok = ok && std::abs(sr.lambda_hat + gs.sw.omega) <= copts.multiplier_tol;
  ok = ok && gs.sw.omega < 1.0;
  if (gs.lambda_ratio >= 1.0) {
    gs.warnings.push_back("energy/charge ratio >= 1: sufficient existence condition not met");
    ok = false;
  }
  if (const auto sbar = pot.sbar(); sbar && !maximum_principle_check(gs.sw, *sbar)) {
    gs.warnings.push_back("profile exceeds the saturation level");
    ok = false;
  }
  gs.certified = ok;
}

}  // namespace detail

/// Ground state at fixed frequency via shooting, with certification.
inline GroundState ground_state_for_omega(const ScalarPotential& pot, double omega, const GridPtr& grid,
                                          const ShootingOptions& sopts = {}, const CertifyOptions& copts = {}) {
  GroundState gs;
  gs.sw = StandingWave(shoot_radial(pot, omega, grid, sopts), omega);
  gs.charge = charge_Y(gs.sw);
  gs.energy = energy_Y(gs.sw, pot);
  gs.lambda_ratio = gs.energy / std::abs(gs.charge);
  gs.J_value = functional_J(gs.sw.profile, pot);
  gs.mu = omega * omega - 1.0;
  detail::certify(gs, pot, copts);
  return gs;
}

struct ChargeSolveOptions {
  SphereSolveOptions sphere;
  CertifyOptions certify;
  double ctol = 1e-9;        ///< |C(u, omega) - C| at the solution.
  double scan_ratio = 1.2;   ///< Geometric spacing of the mass scan.
  double scan_max = 8.0;     ///< Scan masses up to scan_max * |C|.
  int scan_max_iter = 2000;  ///< Iteration cap per scan point; a miss ends the scan.
};

/// Minimizer of E on the charge manifold {C(u, omega) = C}, C < 0.
///
/// The minimum over the manifold equals the minimum over rho of
///   F(rho) = min_{int u^2 = rho} J + rho/2 + C^2/(2 rho),
/// and stationary points of F are exactly the masses where
/// omega(rho) rho = |C| with omega(rho) = sqrt(1 + mu(rho)). The solver scans
/// rho, brackets every local minimum of F by a sign change of
/// g(rho) = omega(rho) rho - |C|, refines each by the Illinois secant
/// iteration and keeps the lowest energy.
inline GroundState ground_state_for_charge(const ScalarPotential& pot, double C, const GridPtr& grid,
                                           const ChargeSolveOptions& opts = {}) {
  if (C == 0.0) throw ArgumentError("ground_state_for_charge: charge must be nonzero");
  if (C > 0.0) throw ArgumentError("ground_state_for_charge: positive charges are handled by sign flip (C < 0 required)");
  const double absC = -C;

  struct Sample {
    double rho;
    SphereSolveResult sol;
    double g;  // omega(rho) rho - |C|, with omega = 0 when mu <= -1
    double F;
  };
  std::optional<Profile> warm;
  auto solve_at = [&](double rho, int max_iter = -1) {
    SphereSolveOptions so = opts.sphere;
    if (max_iter > 0) {
      so.max_iter = std::min(so.max_iter, max_iter);
      so.allow_unconverged = true;
    }
    if (warm && !so.seed) so.seed = warm;
    SphereSolveResult sol = minimize_J_on_sphere(pot, rho, grid, so);
    warm = sol.profile;
    const double om2 = 1.0 + sol.mu;
    const double om = om2 > 0.0 ? std::sqrt(om2) : 0.0;
    const double F = sol.J_value + 0.5 * rho + C * C / (2.0 * rho);
    return Sample{rho, std::move(sol), om * rho - absC, F};
  };

  // A scan point that does not converge ends the scan. This happens for
  // saturated potentials once the minimizer reaches the kink of R at sbar,
  // where no smooth critical point exists.
  std::vector<Sample> scan;
  std::vector<std::string> scan_notes;
  for (double rho = absC * 1.01; rho <= opts.scan_max * absC; rho *= opts.scan_ratio) {
    Sample smp = solve_at(rho, opts.scan_max_iter);
    if (!smp.sol.converged && !smp.sol.dispersive_warning) {
      scan_notes.push_back("mass scan stopped at rho = " + std::to_string(rho) + " (sphere flow did not converge)");
      break;
    }
    scan.push_back(std::move(smp));
  }

  std::optional<Sample> best;
  for (std::size_t j = 0; j + 1 < scan.size(); ++j) {
    if (!(scan[j].g < 0.0 && scan[j + 1].g >= 0.0)) continue;
    warm = scan[j].sol.profile;
    std::optional<Sample> last;
    auto g = [&](double rho) {
      last = solve_at(rho);
      return last->g;
    };
    const double rho = numerics::illinois_root(g, scan[j].rho, scan[j + 1].rho, scan[j].g, scan[j + 1].g,
                                               opts.ctol, 1e-14 * absC);
    if (!last || last->rho != rho) last = solve_at(rho);
    if (!best || last->F < best->F) best = std::move(last);
  }
  if (!best) {
    // No admissible frequency matches the charge: report the lowest-F sample uncertified.
    auto it = std::min_element(scan.begin(), scan.end(), [](const Sample& a, const Sample& b) { return a.F < b.F; });
    if (it == scan.end()) throw SolverError("ground_state_for_charge: empty mass scan", 0.0);
    GroundState gs;
    gs.warnings = scan_notes;
    const double om = std::max(absC / it->rho, 1e-300);
    gs.sw = StandingWave(it->sol.profile, om);
    gs.charge = charge_Y(gs.sw);
    gs.energy = it->F;
    gs.lambda_ratio = gs.energy / absC;
    gs.J_value = it->sol.J_value;
    gs.mu = it->sol.mu;
    gs.warnings.push_back("no mass with omega(rho) rho = |C| found; result is not a critical point");
    detail::certify(gs, pot, opts.certify);
    gs.certified = false;
    return gs;
  }

  GroundState gs;
  gs.warnings = scan_notes;
  const double om = std::sqrt(1.0 + best->sol.mu);
  gs.sw = StandingWave(best->sol.profile, om);
  gs.charge = charge_Y(gs.sw);
  gs.energy = best->F;
  gs.lambda_ratio = gs.energy / absC;
  gs.J_value = best->sol.J_value;
  gs.mu = best->sol.mu;
  if (best->sol.dispersive_warning) gs.warnings.push_back("sphere minimization did not concentrate (J >= 0)");
  detail::certify(gs, pot, opts.certify);
  return gs;
}

}  // namespace nkg
