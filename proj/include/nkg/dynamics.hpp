#pragma once

// Field states (psi, psi_t) on line or radial grids, the velocity-Verlet
// evolution of psi_tt = Lap psi - W'(psi), conserved quantities, polar
// decomposition, Lorentz boosts and the orbital distance to a standing wave.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "nkg/errors.hpp"
#include "nkg/functionals.hpp"
#include "nkg/grid.hpp"
#include "nkg/potential.hpp"

namespace nkg {

using cplx = std::complex<double>;

struct FieldState {
  GridPtr grid;
  std::vector<cplx> psi;
  std::vector<cplx> psit;
  double time = 0.0;

  FieldState() = default;
  FieldState(GridPtr g, double t = 0.0)
      : grid(std::move(g)), psi(grid->size()), psit(grid->size()), time(t) {}

  void validate() const {
    if (!grid) throw ArgumentError("field state without grid");
    if (psi.size() != grid->size() || psit.size() != grid->size())
      throw ArgumentError("field state size does not match grid");
    for (std::size_t i = 0; i < psi.size(); ++i)
      if (!std::isfinite(psi[i].real()) || !std::isfinite(psi[i].imag()) || !std::isfinite(psit[i].real()) ||
          !std::isfinite(psit[i].imag()))
        throw NumericError("non-finite field value", i);
  }
};

struct ConservedSet {
  double energy = 0.0;
  double charge = 0.0;
  double momentum = 0.0;  ///< zero on radial grids
  double ergocenter_velocity = 0.0;
};

struct PolarDecomp {
  std::vector<double> u;
  std::vector<double> S;
  double omega_tilde = 0.0;
};

namespace detail {

/// Profile value at distance |x - x0| from the center, using the node value
/// when the point coincides with a node of the profile grid.
class ProfileSampler {
 public:
  explicit ProfileSampler(const Profile& p) : p_(p), spline_(p) {}

  std::pair<double, double> eval(double r) const {
    const double ar = std::abs(r);
    const double h = p_.grid->spacing();
    const double k = std::round(ar / h);
    if (std::abs(ar - k * h) <= 1e-9 * h && k < static_cast<double>(p_.u.size())) {
      const auto d = spline_.eval(k * h).second;
      return {p_.u[static_cast<std::size_t>(k)], r < 0.0 ? -d : d};
    }
    const auto [v, d] = spline_.eval(ar);
    return {v, r < 0.0 ? -d : d};
  }

 private:
  const Profile& p_;
  RadialInterpolant spline_;
};

/// Signed offset x - x0 wrapped into the periodic cell when needed.
inline double offset(const Grid& g, double x, double x0) {
  double d = x - x0;
  if (g.is_periodic()) {
    const double period = 2.0 * g.extent();
    d -= period * std::round(d / period);
  }
  return d;
}

inline void check_geometry(const StandingWave& sw, const Grid& g) {
  sw.profile.grid ? void() : throw ArgumentError("standing wave without grid");
  if (g.is_radial()) {
    if (!sw.profile.grid->same_layout(g))
      throw ArgumentError("radial geometry must match the standing-wave grid");
  } else if (sw.profile.grid->dimension() != 1) {
    throw ArgumentError("line geometry requires a one-dimensional standing wave");
  }
}

}  // namespace detail

/// Real profile u(|x - x0|) sampled on g (or copied on a matching radial grid).
inline std::vector<double> sample_profile(const StandingWave& sw, const Grid& g, double x0 = 0.0) {
  detail::check_geometry(sw, g);
  if (g.is_radial()) return sw.profile.u;
  detail::ProfileSampler s(sw.profile);
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = s.eval(detail::offset(g, g.node(i), x0)).first;
  return u;
}

/// psi = u e^{-i omega t}, psi_t = -i omega psi. x0 shifts the center on line grids.
inline FieldState embed_standing_wave(const StandingWave& sw, double t, const GridPtr& geometry, double x0 = 0.0) {
  if (!geometry) throw ArgumentError("embed: missing geometry");
  if (geometry->is_radial() && x0 != 0.0) throw ArgumentError("embed: radial states cannot be translated");
  const auto u = sample_profile(sw, *geometry, x0);
  FieldState st(geometry, t);
  const cplx phase = std::polar(1.0, -sw.omega * t);
  for (std::size_t i = 0; i < u.size(); ++i) {
    st.psi[i] = u[i] * phase;
    st.psit[i] = cplx(0.0, -sw.omega) * st.psi[i];
  }
  return st;
}

/// Line grid whose nodes are the mirror image of a one-dimensional radial grid,
/// so that quadratures of mirrored profiles agree with the radial ones.
inline GridPtr mirrored_line_grid(const Grid& radial, bool periodic = true) {
  if (!radial.is_radial() || radial.dimension() != 1)
    throw ArgumentError("mirrored_line_grid: one-dimensional radial grid required");
  const std::size_t n = radial.size();
  return make_line_grid(radial.extent(), periodic ? 2 * (n - 1) : 2 * n - 1, periodic);
}

struct BoostParameters {
  double gamma;
  double omega_bar;
  double k;
};

inline BoostParameters boost_parameters(double omega, double v) {
  if (!(std::abs(v) < 1.0)) throw ArgumentError("boost: |v| must be below 1");
  const double gamma = 1.0 / std::sqrt(1.0 - v * v);
  return {gamma, gamma * omega, gamma * omega * v};
}

/// psi(t,x) = u(gamma(x - vt - x0)) e^{i(kx - omega_bar t)} on a line grid.
inline FieldState boost(const StandingWave& sw, double v, const GridPtr& geometry, double t = 0.0, double x0 = 0.0) {
  const auto bp = boost_parameters(sw.omega, v);
  if (!geometry || geometry->is_radial()) throw ArgumentError("boost: line geometry required");
  detail::check_geometry(sw, *geometry);
  detail::ProfileSampler s(sw.profile);
  FieldState st(geometry, t);
  for (std::size_t i = 0; i < st.psi.size(); ++i) {
    const double x = geometry->node(i);
    const double xi = detail::offset(*geometry, x, v * t + x0);
    const auto [u, du] = s.eval(bp.gamma * xi);
    const cplx e = std::polar(1.0, bp.k * x - bp.omega_bar * t);
    st.psi[i] = u * e;
    st.psit[i] = (-bp.gamma * v * du + cplx(0.0, -bp.omega_bar) * u) * e;
  }
  return st;
}

// ---------------------------------------------------------------------------
// Evolution

/// Mask-damping sponge on open grids: psi_t is multiplied by exp(-sigma(x) dt)
/// with sigma rising quadratically to `strength` over the outer `fraction` of the box.
struct Sponge {
  double fraction = 0.1;
  double strength = 2.0;
};

class Evolver {
 public:
  Evolver(ScalarPotential pot, std::optional<Sponge> sponge = std::nullopt)
      : pot_(std::move(pot)), sponge_(sponge) {}

  /// Force Lap psi - W'(psi) into out.
  void force(const Grid& g, std::span<const cplx> psi, std::span<cplx> out) const {
    g.laplacian<cplx>(psi, out);
    for (std::size_t i = 0; i < psi.size(); ++i) out[i] -= pot_.dW_over_s(std::abs(psi[i])) * psi[i];
  }

  /// One velocity-Verlet step (kick, drift, kick). dt may be negative.
  void step(FieldState& st, double dt) {
    const Grid& g = *st.grid;
    if (!(std::abs(dt) <= 0.5 * g.spacing() * (1.0 + 1e-12)))
      throw ArgumentError("step: CFL condition |dt| <= h/2 violated");
    const std::size_t n = g.size();
    if (f_.size() != n || !cached_ || cached_grid_ != st.grid.get() || cached_data_ != st.psi.data() ||
        cached_time_ != st.time) {
      f_.resize(n);
      force(g, st.psi, f_);
    }
    for (std::size_t i = 0; i < n; ++i) {
      st.psit[i] += 0.5 * dt * f_[i];
      st.psi[i] += dt * st.psit[i];
    }
    force(g, st.psi, f_);
    for (std::size_t i = 0; i < n; ++i) st.psit[i] += 0.5 * dt * f_[i];
    st.time += dt;
    if (sponge_ && g.kind() == GridKind::line_open) apply_sponge(st, std::abs(dt));
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(st.psi[i].real()) || !std::isfinite(st.psi[i].imag()) || !std::isfinite(st.psit[i].real()) ||
          !std::isfinite(st.psit[i].imag())) {
        cached_ = false;
        throw BlowUpError("non-finite field during evolution", st.time);
      }
    cached_ = !(sponge_ && g.kind() == GridKind::line_open);
    cached_grid_ = st.grid.get();
    cached_data_ = st.psi.data();
    cached_time_ = st.time;
  }

  /// Forgets the cached force (call after modifying a state externally).
  void reset() { cached_ = false; }

  const ScalarPotential& potential() const { return pot_; }

 private:
  void apply_sponge(FieldState& st, double dt) const {
    const Grid& g = *st.grid;
    const double L = g.extent();
    const double width = sponge_->fraction * 2.0 * L;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double depth = std::abs(g.node(i)) - (L - width);
      if (depth <= 0.0) continue;
      const double s = depth / width;
      st.psit[i] *= std::exp(-sponge_->strength * s * s * dt);
    }
  }

  ScalarPotential pot_;
  std::optional<Sponge> sponge_;
  std::vector<cplx> f_;
  bool cached_ = false;
  const Grid* cached_grid_ = nullptr;
  const cplx* cached_data_ = nullptr;
  double cached_time_ = 0.0;
};

/// Single step without a persistent evolver.
inline FieldState step(FieldState state, double dt, const ScalarPotential& pot) {
  Evolver ev(pot);
  ev.step(state, dt);
  return state;
}

// ---------------------------------------------------------------------------
// Functionals on X

inline double field_energy(const FieldState& st, const ScalarPotential& pot) {
  const Grid& g = *st.grid;
  double acc = 0.5 * g.gradient_norm2<cplx>(st.psi) + 0.5 * g.norm2<cplx>(st.psit);
  double rho = 0.0, rem = 0.0;
  for (std::size_t i = 0; i < st.psi.size(); ++i) {
    const double s = std::abs(st.psi[i]);
    rho += g.weight(i) * s * s;
    const double r = remainder(pot, s).R;
    if (!std::isfinite(r)) throw NumericError("non-finite potential value", i);
    rem += g.weight(i) * r;
  }
  return acc + 0.5 * rho + rem;
}

/// Im sum_i w_i psi_t conj(psi).
inline double field_charge(const FieldState& st) {
  const Grid& g = *st.grid;
  double acc = 0.0;
  for (std::size_t i = 0; i < st.psi.size(); ++i) acc += g.weight(i) * (st.psit[i] * std::conj(st.psi[i])).imag();
  return acc;
}

/// -Re sum_i w_i psi_t conj(d psi/dx); zero on radial grids.
inline double field_momentum(const FieldState& st) {
  const Grid& g = *st.grid;
  if (g.is_radial()) return 0.0;
  const auto d = g.derivative<cplx>(st.psi);
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) acc += g.weight(i) * (st.psit[i] * std::conj(d[i])).real();
  return -acc;
}

inline ConservedSet conserved(const FieldState& st, const ScalarPotential& pot) {
  st.validate();
  ConservedSet c;
  c.energy = field_energy(st, pot);
  c.charge = field_charge(st);
  c.momentum = field_momentum(st);
  if (c.energy == 0.0) {
    if (c.momentum != 0.0) throw NumericError("ergocenter velocity: zero energy with nonzero momentum", 0);
    c.ergocenter_velocity = 0.0;
  } else {
    c.ergocenter_velocity = c.momentum / c.energy;
  }
  return c;
}

/// Energy-weighted center sum_i w_i e_i x_i / sum_i w_i e_i (line grids).
inline double energy_center(const FieldState& st, const ScalarPotential& pot) {
  const Grid& g = *st.grid;
  if (g.is_radial()) return 0.0;
  const std::size_t n = g.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const double grad = (i + 1 < n || g.is_periodic()) ? std::norm(st.psi[j] - st.psi[i]) / (g.spacing() * g.spacing()) : 0.0;
    const double e = 0.5 * std::norm(st.psit[i]) + 0.5 * grad + pot(std::abs(st.psi[i])).W;
    num += g.weight(i) * e * g.node(i);
    den += g.weight(i) * e;
  }
  return den == 0.0 ? 0.0 : num / den;
}

inline PolarDecomp polar_decompose(const FieldState& st) {
  st.validate();
  const Grid& g = *st.grid;
  const std::size_t n = st.psi.size();
  PolarDecomp p;
  p.u.resize(n);
  p.S.assign(n, 0.0);
  double umax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p.u[i] = std::abs(st.psi[i]);
    umax = std::max(umax, p.u[i]);
  }
  const double rho = g.norm2<double>(p.u);
  if (!(rho > 0.0)) throw NumericError("polar_decompose: zero field", 0);
  const double thr = 1e-8 * umax;
  // Start unwrapping from the largest value; extend constantly below the threshold.
  const std::size_t i0 = static_cast<std::size_t>(std::max_element(p.u.begin(), p.u.end()) - p.u.begin());
  p.S[i0] = std::arg(st.psi[i0]);
  auto walk = [&](std::size_t from, std::size_t to) {
    const double prev = p.S[from];
    if (p.u[to] > thr) {
      double d = std::arg(st.psi[to]) - std::remainder(prev, 2.0 * std::numbers::pi);
      d = std::remainder(d, 2.0 * std::numbers::pi);
      p.S[to] = prev + d;
    } else {
      p.S[to] = prev;
    }
  };
  for (std::size_t i = i0 + 1; i < n; ++i) walk(i - 1, i);
  for (std::size_t i = i0; i-- > 0;) walk(i + 1, i);
  p.omega_tilde = -field_charge(st) / rho;
  return p;
}

/// omega_tilde * C / charge(state): the frequency that puts (u, omega) on the level C.
inline double project_omega(const FieldState& st, double C) {
  const double c = field_charge(st);
  if (c == 0.0) throw NumericError("project_omega: state carries zero charge", 0);
  return polar_decompose(st).omega_tilde * C / c;
}

/// Terms of the inequality E(Psi) >= E(u, omega_tilde) + (1/2) int (|grad S|^2 u^2 + (d_t u)^2).
/// The phase-gradient term is discretized edgewise as 4 u_i u_j sin^2(dS/2) / h^2,
/// which makes |d psi|^2 = (d u)^2 + (that term) hold exactly on every edge.
struct HolderTerms {
  double field_energy;
  double profile_energy;  ///< E(u, omega_tilde)
  double phase_gradient;  ///< (1/2) int |grad S|^2 u^2
  double modulus_rate;    ///< (1/2) int (d_t u)^2
  double slack() const { return field_energy - (profile_energy + phase_gradient + modulus_rate); }
};

inline HolderTerms holder_terms(const FieldState& st, const ScalarPotential& pot) {
  const Grid& g = *st.grid;
  const auto pd = polar_decompose(st);
  HolderTerms t{};
  t.field_energy = field_energy(st, pot);
  t.profile_energy = energy_Y(g, pd.u, pd.omega_tilde, pot);
  double ph = 0.0;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const std::size_t j = g.edge_head(e);
    const double s = std::sin(0.5 * (pd.S[j] - pd.S[e]));
    ph += g.edge_coefficient(e) * 4.0 * pd.u[e] * pd.u[j] * s * s;
  }
  t.phase_gradient = 0.5 * ph;
  double mr = 0.0;
  for (std::size_t i = 0; i < st.psi.size(); ++i) {
    const double a = (st.psit[i] * std::polar(1.0, -pd.S[i])).real();
    mr += g.weight(i) * a * a;
  }
  t.modulus_rate = 0.5 * mr;
  return t;
}

/// (E - m_c)^2 + (C - C_target)^2.
inline double lyapunov_V(const FieldState& st, double m_c, double C, const ScalarPotential& pot) {
  const double e = field_energy(st, pot) - m_c;
  const double c = field_charge(st) - C;
  return e * e + c * c;
}

// ---------------------------------------------------------------------------
// Orbital distance

struct OrbitalDistance {
  double distance;
  double shift;  ///< translation y of the reference u(x - y)
  double phase;  ///< theta in psi ~ e^{i theta} u(x - y)
};

namespace detail {

/// Forward difference along the grid edges (zero past an open end).
inline void forward_difference(const Grid& g, std::span<const cplx> f, std::span<cplx> out) {
  const std::size_t n = f.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t e = 0; e < g.edge_count(); ++e) out[e] = (f[g.edge_head(e)] - f[e]) / g.spacing();
}

struct DistanceParts {
  double value;
  cplx overlap;
};

/// Distance of the state to e^{i theta} (u, -i omega u) with theta optimal for the
/// summed squared norms.
inline DistanceParts distance_to(const FieldState& st, const std::vector<double>& u, double omega) {
  const Grid& g = *st.grid;
  const std::size_t n = u.size();
  std::vector<cplx> uc(u.begin(), u.end()), du(n), dpsi(n);
  forward_difference(g, uc, du);
  forward_difference(g, st.psi, dpsi);
  // Gradient quadrature: edge sums with weight h (equals sum_e c_e |f_j - f_i|^2).
  auto edge_w = [&](std::size_t i) { return i < g.edge_count() ? g.spacing() : 0.0; };
  cplx X = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    X += g.weight(i) * st.psi[i] * u[i];
    X += edge_w(i) * dpsi[i] * std::conj(du[i]);
    X += g.weight(i) * st.psit[i] * std::conj(cplx(0.0, -omega) * u[i]);
  }
  const cplx rot = std::abs(X) > 0.0 ? X / std::abs(X) : cplx(1.0, 0.0);
  double a = 0.0, b = 0.0, c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a += g.weight(i) * std::norm(st.psi[i] - rot * u[i]);
    b += edge_w(i) * std::norm(dpsi[i] - rot * du[i]);
    c += g.weight(i) * std::norm(st.psit[i] - rot * cplx(0.0, -omega) * u[i]);
  }
  return {std::sqrt(a) + std::sqrt(b) + std::sqrt(c), X};
}

/// |X(m)| for every integer shift m of the reference, by FFT cross-correlation.
inline std::vector<double> shift_overlaps(const FieldState& st, const std::vector<double>& u, double omega) {
  const Grid& g = *st.grid;
  const std::size_t n = u.size();
  const std::size_t m = g.is_periodic() ? n : 2 * n;
  const double h = g.spacing();
  // Combined pairing: sum_x [psi conj(T u) + dpsi conj(T du) + psit conj(T(-i omega u))] w.
  // T(-i omega u) = -i omega T u, so the psit term folds into the u channel.
  std::vector<cplx> uc(u.begin(), u.end()), du(n), dpsi(n);
  forward_difference(g, uc, du);
  forward_difference(g, st.psi, dpsi);
  auto* a1 = fftw_alloc_complex(m);
  auto* a2 = fftw_alloc_complex(m);
  auto* b1 = fftw_alloc_complex(m);
  auto* b2 = fftw_alloc_complex(m);
  auto* out = fftw_alloc_complex(m);
  auto set = [](fftw_complex* p, std::size_t i, cplx v) {
    p[i][0] = v.real();
    p[i][1] = v.imag();
  };
  for (std::size_t i = 0; i < m; ++i) {
    if (i < n) {
      const double w = g.weight(i);
      const double we = i < g.edge_count() ? h : 0.0;
      // State channels, already weighted; the reference enters unweighted.
      set(a1, i, w * (st.psi[i] + cplx(0.0, omega) * st.psit[i]));
      set(a2, i, we * dpsi[i]);
      set(b1, i, uc[i]);
      set(b2, i, du[i]);
    } else {
      set(a1, i, 0.0);
      set(a2, i, 0.0);
      set(b1, i, 0.0);
      set(b2, i, 0.0);
    }
  }
  // psit conj(-i omega u) = i omega psit u, which is folded into a1 above.
  const int mi = static_cast<int>(m);
  auto fwd = [&](fftw_complex* p) {
    fftw_plan pl = fftw_plan_dft_1d(mi, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(pl);
    fftw_destroy_plan(pl);
  };
  fwd(a1);
  fwd(a2);
  fwd(b1);
  fwd(b2);
  // X(s) = sum_i a(i) conj(b(i - s)) -> A(k) conj(B(k)) transformed back.
  for (std::size_t k = 0; k < m; ++k) {
    const cplx A1(a1[k][0], a1[k][1]), A2(a2[k][0], a2[k][1]);
    const cplx B1(b1[k][0], b1[k][1]), B2(b2[k][0], b2[k][1]);
    set(out, k, A1 * std::conj(B1) + A2 * std::conj(B2));
  }
  fftw_plan pl = fftw_plan_dft_1d(mi, out, out, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(pl);
  fftw_destroy_plan(pl);
  std::vector<double> mag(m);
  for (std::size_t k = 0; k < m; ++k) mag[k] = std::hypot(out[k][0], out[k][1]) / static_cast<double>(m);
  for (auto* p : {a1, a2, b1, b2, out}) fftw_free(p);
  return mag;
}

}  // namespace detail

/// min over translations y and phases theta of
///   ||psi - e^{i theta} u(. - y)||_{H1} + ||psi_t - e^{i theta}(-i omega) u(. - y)||_{L2},
/// with the H1 norm taken as L2(value) + L2(gradient). Integer grid shifts are scanned
/// by cross-correlation and the best one refined by one parabolic step.
inline OrbitalDistance orbital_distance_full(const FieldState& st, const StandingWave& sw) {
  st.validate();
  const Grid& g = *st.grid;
  if (g.is_radial()) {
    const auto u = sample_profile(sw, g);
    const auto d = detail::distance_to(st, u, sw.omega);
    return {d.value, 0.0, std::arg(d.overlap)};
  }
  const auto u0 = sample_profile(sw, g);
  const auto mag = detail::shift_overlaps(st, u0, sw.omega);
  const std::size_t m = mag.size();
  const std::size_t best = static_cast<std::size_t>(std::max_element(mag.begin(), mag.end()) - mag.begin());
  const double h = g.spacing();
  auto shift_of = [&](std::size_t k) {
    const long s = k <= m / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(m);
    return static_cast<double>(s) * h;
  };
  const double y_int = shift_of(best);
  auto eval_at = [&](double y) {
    const auto u = sample_profile(sw, g, y);
    const auto d = detail::distance_to(st, u, sw.omega);
    return OrbitalDistance{d.value, y, std::arg(d.overlap)};
  };
  OrbitalDistance res = eval_at(y_int);
  const double fm = mag[(best + m - 1) % m], f0 = mag[best], fp = mag[(best + 1) % m];
  const double denom = fm - 2.0 * f0 + fp;
  if (denom < 0.0) {
    const double delta = std::clamp(0.5 * (fm - fp) / denom, -0.5, 0.5);
    if (delta != 0.0) {
      const auto r2 = eval_at(y_int + delta * h);
      if (r2.distance < res.distance) res = r2;
    }
  }
  return res;
}

inline double orbital_distance(const FieldState& st, const StandingWave& sw) {
  return orbital_distance_full(st, sw).distance;
}

/// Sum-of-norms size ||dpsi||_{H1} + ||dpsit||_{L2} of a perturbation pair.
inline double perturbation_size(const Grid& g, std::span<const cplx> dpsi, std::span<const cplx> dpsit) {
  return std::sqrt(g.norm2<cplx>(dpsi)) + std::sqrt(g.gradient_norm2<cplx>(dpsi)) + std::sqrt(g.norm2<cplx>(dpsit));
}

}  // namespace nkg
