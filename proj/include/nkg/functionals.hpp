#pragma once

// Energy, charge and the derived ratios on pairs (u, omega), evaluated with
// the grid quadrature. The potential integral is split as
//   int W(u) = (1/2) int u^2 + int R(u),
// so every functional shares the same mass sum rho = sum_i w_i u_i^2.

#include <cmath>
#include <span>
#include <vector>

#include "nkg/errors.hpp"
#include "nkg/grid.hpp"
#include "nkg/potential.hpp"

namespace nkg {

// ---------------------------------------------------------------------------
// Grid-level integrals

/// sum_i w_i u_i^2.
inline double mass(const Grid& g, std::span<const double> u) { return g.norm2(u); }

/// Discrete integral of |u'|^2.
inline double gradient_integral(const Grid& g, std::span<const double> u) { return g.gradient_norm2(u); }

/// sum_i w_i R(u_i); throws NumericError on a non-finite potential value.
inline double remainder_integral(const Grid& g, std::span<const double> u, const ScalarPotential& pot) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = remainder(pot, std::abs(u[i])).R;
    if (!std::isfinite(r)) throw NumericError("non-finite potential value", i);
    acc += g.weight(i) * r;
  }
  return acc;
}

/// int ((1/2)|u'|^2 + (1/2) omega^2 u^2 + W(u)).
inline double energy_Y(const Grid& g, std::span<const double> u, double omega, const ScalarPotential& pot) {
  const double rho = mass(g, u);
  return 0.5 * gradient_integral(g, u) + 0.5 * omega * omega * rho + 0.5 * rho + remainder_integral(g, u, pot);
}

/// int ((1/2)|u'|^2 + R(u)).
inline double functional_J(const Grid& g, std::span<const double> u, const ScalarPotential& pot) {
  return 0.5 * gradient_integral(g, u) + remainder_integral(g, u, pot);
}

// ---------------------------------------------------------------------------
// Profile-level API

inline void validate_profile(const Profile& p) {
  if (!p.grid) throw ArgumentError("profile without grid");
  if (p.u.size() != p.grid->size()) throw ArgumentError("profile size does not match grid");
  for (std::size_t i = 0; i < p.u.size(); ++i) {
    if (!std::isfinite(p.u[i])) throw NumericError("non-finite profile value", i);
    if (p.u[i] < 0.0) throw ArgumentError("profile must be nonnegative (node " + std::to_string(i) + ")");
  }
}

inline double mass(const Profile& p) { return mass(*p.grid, p.u); }

inline double energy_Y(const StandingWave& sw, const ScalarPotential& pot) {
  validate_profile(sw.profile);
  return energy_Y(*sw.profile.grid, sw.profile.u, sw.omega, pot);
}

/// -omega int u^2.
inline double charge_Y(const StandingWave& sw) {
  validate_profile(sw.profile);
  return -sw.omega * mass(sw.profile);
}

inline double functional_J(const Profile& p, const ScalarPotential& pot) {
  validate_profile(p);
  return functional_J(*p.grid, p.u, pot);
}

/// int((1/2)|u'|^2 + W(u)) / int (1/2) u^2.
inline double alpha(const Profile& p, const ScalarPotential& pot) {
  validate_profile(p);
  const double rho = mass(p);
  if (!(rho > 0.0)) throw DomainError("alpha: zero profile");
  return (0.5 * gradient_integral(*p.grid, p.u) + 0.5 * rho + remainder_integral(*p.grid, p.u, pot)) / (0.5 * rho);
}

/// Energy per unit charge, omega/2 + alpha(u)/(2 omega).
inline double lambda_ratio(const Profile& p, double omega, const ScalarPotential& pot) {
  if (!(omega > 0.0)) throw ArgumentError("lambda_ratio: omega must be positive");
  return 0.5 * omega + alpha(p, pot) / (2.0 * omega);
}

inline double lambda_ratio(const StandingWave& sw, const ScalarPotential& pot) {
  return lambda_ratio(sw.profile, sw.omega, pot);
}

// ---------------------------------------------------------------------------
// Trial families

/// u = r0 on [0, R], linear ramp to zero on [R, R + 1], zero beyond.
inline Profile plateau_profile(double r0, double R, GridPtr grid) {
  if (!(r0 > 0.0)) throw ArgumentError("plateau_profile: r0 must be positive");
  if (!(R >= 0.0)) throw ArgumentError("plateau_profile: R must be nonnegative");
  if (!grid->is_radial()) throw ArgumentError("plateau_profile: radial grid required");
  if (grid->extent() < R + 1.0) throw ArgumentError("plateau_profile: grid r_max must be at least R + 1");
  std::vector<double> u(grid->size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = grid->node(i);
    u[i] = r <= R ? r0 : (r >= R + 1.0 ? 0.0 : r0 * (1.0 + R - r));
  }
  return Profile(std::move(grid), std::move(u));
}

/// u = gamma R^{-N/2} on [0, R], linear ramp to zero over [R, 2R].
inline Profile scaled_plateau(double gamma, double R, GridPtr grid) {
  if (!(gamma > 0.0) || !(R > 0.0)) throw ArgumentError("scaled_plateau: gamma and R must be positive");
  if (!grid->is_radial()) throw ArgumentError("scaled_plateau: radial grid required");
  if (grid->extent() < 2.0 * R) throw ArgumentError("scaled_plateau: grid r_max must be at least 2R");
  const double height = gamma * std::pow(R, -0.5 * grid->dimension());
  std::vector<double> u(grid->size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = grid->node(i);
    u[i] = r <= R ? height : (r >= 2.0 * R ? 0.0 : height * (2.0 - r / R));
  }
  return Profile(std::move(grid), std::move(u));
}

/// gamma such that charge_Y(scaled_plateau(gamma, R), omega) equals C.
inline double scaled_plateau_gamma_for_charge(double C, double R, const GridPtr& grid, double omega = 1.0) {
  if (C == 0.0) throw ArgumentError("target charge must be nonzero");
  const double unit_mass = mass(scaled_plateau(1.0, R, grid));
  return std::sqrt(std::abs(C) / (omega * unit_mass));
}

}  // namespace nkg
