#pragma once

// Subcommand implementations behind the `nkg` executable. Each takes the
// resolved configuration, writes its files under output.out and returns the
// process exit code.

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "nkg/config.hpp"
#include "nkg/diagnostics.hpp"
#include "nkg/dynamics.hpp"
#include "nkg/errors.hpp"
#include "nkg/groundstate.hpp"
#include "nkg/io.hpp"
#include "nkg/potential.hpp"

namespace nkg::cli {

enum ExitCode : int { ok = 0, hypothesis_failed = 1, usage = 2, solver = 3, blow_up = 4 };

using io::json;

// ---------------------------------------------------------------------------
// Resolved run settings

struct RunConfig {
  ScalarPotential pot;
  GridPtr grid;
  SphereSolveOptions sphere;
  CertifyOptions certify;
  double charge_tol;
  std::string out;
  int threads;
};

inline RunConfig resolve(const Config& cfg) {
  ScalarPotential pot = parse_potential(cfg.str("potential.name"));
  if (cfg.has("potential.saturate")) pot = saturate(pot, cfg.num("potential.saturate"));
  const long N = cfg.integer("geometry.N");
  const long nodes = cfg.integer("geometry.nodes");
  if (nodes < 64) throw ArgumentError("geometry.nodes must be at least 64");
  const double r_max = cfg.num("geometry.r_max");
  for (const char* k : {"solver.tol", "solver.residual_tol", "solver.multiplier_tol", "solver.charge_tol"})
    if (!(cfg.num(k) > 0.0)) throw ArgumentError(std::string(k) + " must be positive");
  const long max_iter = cfg.integer("solver.max_iter");
  if (max_iter < 1) throw ArgumentError("solver.max_iter must be positive");
  const long threads = cfg.integer("output.threads");
  if (threads < 1) throw ArgumentError("output.threads must be at least 1");
  RunConfig rc{pot, make_radial_grid(static_cast<int>(N), r_max, static_cast<std::size_t>(nodes)), {}, {},
               cfg.num("solver.charge_tol"), cfg.str("output.out"), static_cast<int>(threads)};
  rc.sphere.tol = cfg.num("solver.tol");
  rc.sphere.max_iter = static_cast<int>(max_iter);
  rc.certify.residual_tol = cfg.num("solver.residual_tol");
  rc.certify.multiplier_tol = cfg.num("solver.multiplier_tol");
  return rc;
}

/// Ground state from exactly one of run.omega / run.charge.
inline GroundState solve_ground_state(const Config& cfg, const RunConfig& rc) {
  const bool has_w = cfg.has("run.omega"), has_c = cfg.has("run.charge");
  if (has_w == has_c) throw ArgumentError("give exactly one of --omega or --charge");
  if (has_w) {
    const double w = cfg.num("run.omega");
    if (!(w > 0.0 && w < 1.0)) throw ArgumentError("omega must lie in (0, 1)");
    return ground_state_for_omega(rc.pot, w, rc.grid, {}, rc.certify);
  }
  ChargeSolveOptions co;
  co.sphere = rc.sphere;
  co.certify = rc.certify;
  co.ctol = rc.charge_tol;
  return ground_state_for_charge(rc.pot, cfg.num("run.charge"), rc.grid, co);
}

inline json ground_state_json(const GroundState& gs) {
  json j;
  j["omega"] = gs.sw.omega;
  j["charge"] = gs.charge;
  j["energy"] = gs.energy;
  j["lambda"] = io::num(gs.lambda_multiplier);
  j["residual"] = io::num(gs.residual);
  j["Lambda"] = gs.lambda_ratio;
  j["J"] = gs.J_value;
  j["mu"] = gs.mu;
  j["max_u"] = gs.sw.profile.max();
  j["certified"] = gs.certified;
  j["warnings"] = gs.warnings;
  return j;
}

/// d_curve split into contiguous chunks over `threads` workers; rows keep frequency order.
inline DispersionTable parallel_d_curve(const ScalarPotential& pot, const std::vector<double>& omegas,
                                        const GridPtr& grid, int threads) {
  const std::size_t k = std::max<std::size_t>(1, std::min<std::size_t>(threads, omegas.size()));
  std::vector<DispersionTable> parts(k);
  std::vector<std::exception_ptr> errors(k);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < k; ++t) {
      pool.emplace_back([&, t] {
        const std::size_t lo = omegas.size() * t / k, hi = omegas.size() * (t + 1) / k;
        try {
          parts[t] = d_curve(pot, std::vector<double>(omegas.begin() + lo, omegas.begin() + hi), grid);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  DispersionTable out;
  out.potential = pot.name();
  out.dimension = grid->dimension();
  out.grid = grid->describe();
  for (auto& p : parts) {
    out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
    out.gaps.insert(out.gaps.end(), p.gaps.begin(), p.gaps.end());
  }
  return out;
}

inline json verdict_json(const StabilityVerdict& v) {
  json j;
  j["basis"] = v.basis;
  j["omega0"] = v.omega0;
  j["verdict"] = to_string(v.verdict);
  j["d_second"] = io::num(v.d_second);
  j["tolerance"] = v.tolerance;
  if (v.basis == "dynamics") {
    j["epsilon"] = v.epsilon_used;
    j["horizon_T"] = v.horizon_T;
    j["K"] = v.bound_K;
    j["max_orbital_distance"] = io::num(v.max_orbital_distance);
  }
  j["note"] = "numerical evidence over a finite horizon, not a proof";
  return j;
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_check_potential(const Config& cfg, std::ostream& log) {
  const RunConfig rc = resolve(cfg);
  const auto rep = check_hypotheses(rc.pot, default_hypothesis_grid(), rc.grid->dimension());
  json j;
  j["potential"] = rc.pot.name();
  j["dimension"] = rep.dimension;
  j["h0_ok"] = rep.h0_ok;
  j["W_at_0"] = rep.W_at_0;
  j["dW_at_0"] = rep.dW_at_0;
  j["d2W_at_0"] = rep.d2W_at_0;
  j["h1_ok"] = rep.h1_ok;
  j["alpha0"] = rep.alpha0;
  j["alpha0_argmin"] = rep.alpha0_argmin;
  j["h2_ok"] = rep.h2_ok;
  j["min_W"] = rep.min_W;
  j["h3_ok"] = rep.h3_ok;
  j["h3"] = {{"c1", io::num(rep.h3_c1)}, {"c2", io::num(rep.h3_c2)}, {"p", io::num(rep.h3_p)}, {"q", io::num(rep.h3_q)}};
  j["h1prime_ok"] = rep.h1prime_ok;
  j["h1prime_epsilon"] = io::num(rep.h1prime_epsilon);
  j["near_zero"] = {{"c1", io::num(rep.near_zero_c1)}, {"delta", rep.near_zero_delta}};
  j["admits_solitons"] = rep.admits_solitons();
  j["grid"] = rep.grid_used;
  j["notes"] = rep.notes;
  j["config"] = io::config_json(cfg);
  const auto dir = io::prepare_dir(rc.out);
  io::write_json(dir / "hypotheses.json", j);
  log << "check-potential " << rc.pot.name() << ": H0=" << rep.h0_ok << " H1=" << rep.h1_ok << " H2=" << rep.h2_ok
      << " H3=" << rep.h3_ok << " H1'=" << rep.h1prime_ok << " alpha0=" << rep.alpha0 << "\n";
  return rep.admits_solitons() ? ok : hypothesis_failed;
}

inline int cmd_ground_state(const Config& cfg, std::ostream& log) {
  const RunConfig rc = resolve(cfg);
  const GroundState gs = solve_ground_state(cfg, rc);
  const auto dir = io::prepare_dir(rc.out);
  io::CsvWriter csv(dir / "profile.csv", cfg, {"r", "u"});
  for (std::size_t i = 0; i < rc.grid->size(); ++i) csv.row({rc.grid->node(i), gs.sw.profile.u[i]});
  json j = ground_state_json(gs);
  j["potential"] = rc.pot.name();
  j["grid"] = rc.grid->describe();
  j["config"] = io::config_json(cfg);
  io::write_json(dir / "ground_state.json", j);
  log << "ground-state omega=" << gs.sw.omega << " charge=" << gs.charge << " energy=" << gs.energy
      << " residual=" << gs.residual << " certified=" << gs.certified << "\n";
  for (const auto& w : gs.warnings) log << "warning: " << w << "\n";
  return gs.certified ? ok : solver;
}

inline int cmd_sweep(const Config& cfg, std::ostream& log) {
  const RunConfig rc = resolve(cfg);
  const double lo = cfg.num("sweep.omega_min"), hi = cfg.num("sweep.omega_max");
  if (!(lo > 0.0 && hi < 1.0 && lo <= hi)) throw ArgumentError("sweep range must satisfy 0 < omega_min <= omega_max < 1");
  const auto omegas = omega_range(lo, hi, cfg.num("sweep.omega_step"));
  const DispersionTable t = parallel_d_curve(rc.pot, omegas, rc.grid, rc.threads);
  const auto dir = io::prepare_dir(rc.out);
  io::CsvWriter csv(dir / "dispersion.csv", cfg, {"omega", "charge", "energy", "d", "Lambda"});
  for (const auto& r : t.rows) csv.row({r.omega, r.charge, r.energy, r.d, r.lambda});
  json j;
  j["potential"] = t.potential;
  j["dimension"] = t.dimension;
  j["grid"] = t.grid;
  j["rows"] = t.rows.size();
  j["gaps"] = t.gaps;
  const auto flip = convexity_flip(t);
  j["convexity_flip"] = flip ? json(*flip) : json(nullptr);
  const auto window = power_stability_window(t.dimension);
  j["reference_power_window"] = {{"p_min", window.first}, {"p_max", window.second}};
  j["config"] = io::config_json(cfg);
  io::write_json(dir / "sweep.json", j);
  log << "sweep: " << t.rows.size() << " rows, " << t.gaps.size() << " gaps\n";
  return t.rows.empty() ? solver : ok;
}

inline int cmd_evolve(const Config& cfg, std::ostream& log) {
  const RunConfig rc = resolve(cfg);
  const GroundState gs = solve_ground_state(cfg, rc);
  if (!gs.certified) {
    log << "ground state not certified\n";
    return solver;
  }
  const double v = cfg.num("evolve.velocity");
  const double T = cfg.num("evolve.T");
  if (!(T > 0.0)) throw ArgumentError("evolve.T must be positive");
  std::string boundary = v == 0.0 ? "periodic" : "open";
  if (cfg.str("geometry.boundary") != "auto") boundary = cfg.str("geometry.boundary");
  if (boundary != "periodic" && boundary != "open") throw ArgumentError("geometry.boundary must be auto, periodic or open");
  GridPtr geom;
  if (rc.grid->dimension() == 1) {
    geom = mirrored_line_grid(*rc.grid, boundary == "periodic");
  } else {
    if (v != 0.0) throw ArgumentError("boosts need a one-dimensional geometry");
    geom = rc.grid;
  }
  FieldState st = v != 0.0 ? boost(gs.sw, v, geom) : embed_standing_wave(gs.sw, 0.0, geom);
  std::optional<PerturbationKind> kind;
  double eps = 0.0;
  if (cfg.has("evolve.perturb")) {
    const std::string spec = cfg.str("evolve.perturb");
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ArgumentError("--perturb expects kind:eps");
    kind = parse_perturbation_kind(spec.substr(0, colon));
    eps = detail::parse_number(spec.substr(colon + 1), "--perturb");
    if (!(eps >= 0.0 && eps < 0.1)) throw ArgumentError("perturbation size must lie in [0, 0.1)");
  }
  const FieldState reference = embed_standing_wave(gs.sw, 0.0, geom);
  const double m_c = field_energy(reference, rc.pot), C = field_charge(reference);
  if (kind) perturb(st, sample_profile(gs.sw, *geom), *kind, eps);

  const double dt_factor = cfg.num("evolve.dt_factor");
  if (!(dt_factor > 0.0 && dt_factor <= 0.5)) throw ArgumentError("evolve.dt_factor must lie in (0, 0.5]");
  const long steps = static_cast<long>(std::ceil(T / (dt_factor * geom->spacing()) - 1e-9));
  const double dt = T / static_cast<double>(steps);
  const long every = std::max(1L, static_cast<long>(std::llround(cfg.num("evolve.sample_dt") / dt)));
  const long snap = cfg.integer("evolve.snapshot_stride");

  const auto dir = io::prepare_dir(rc.out);
  io::CsvWriter traj(dir / "trajectory.csv", cfg, {"t", "E", "C", "P", "Qdot", "orbital_distance", "V", "max_abs_psi"});
  std::optional<io::CsvWriter> snaps;
  if (snap > 0) snaps.emplace(dir / "snapshots.csv", cfg, std::vector<std::string>{"t", "x", "re_psi", "im_psi", "re_psit", "im_psit"});
  auto snapshot = [&] {
    for (std::size_t i = 0; i < geom->size(); ++i)
      snaps->row({st.time, geom->node(i), st.psi[i].real(), st.psi[i].imag(), st.psit[i].real(), st.psit[i].imag()});
  };

  Evolver ev(rc.pot, boundary == "open" ? std::optional<Sponge>(Sponge{}) : std::nullopt);
  const auto c0 = conserved(st, rc.pot);
  const double x_start = energy_center(st, rc.pot);
  double dE = 0.0, dC = 0.0, sup = 0.0;
  auto record = [&] {
    const TrajectoryRow r = observe(st, gs.sw, m_c, C, rc.pot);
    traj.row({r.t, r.E, r.C, r.P, r.Qdot, r.distance, r.V, r.max_abs});
    dE = std::max(dE, std::abs(r.E - c0.energy) / std::abs(c0.energy));
    dC = std::max(dC, c0.charge == 0.0 ? std::abs(r.C) : std::abs(r.C - c0.charge) / std::abs(c0.charge));
    sup = std::max(sup, r.distance);
  };
  record();
  if (snaps) snapshot();
  int code = ok;
  double blow_time = 0.0;
  try {
    for (long k = 1; k <= steps; ++k) {
      ev.step(st, dt);
      if (k % every == 0 || k == steps) record();
      if (snaps && k % snap == 0) snapshot();
    }
  } catch (const BlowUpError& e) {
    code = blow_up;
    blow_time = e.time();
  }
  traj.flush();

  json j;
  j["ground_state"] = ground_state_json(gs);
  j["boundary"] = boundary;
  j["dt"] = dt;
  j["steps"] = steps;
  j["initial"] = {{"E", c0.energy}, {"C", c0.charge}, {"P", c0.momentum}, {"Qdot", c0.ergocenter_velocity}};
  j["relative_energy_drift"] = dE;
  j["relative_charge_drift"] = dC;
  if (v != 0.0) {
    const auto bp = boost_parameters(gs.sw.omega, v);
    j["boost"] = {{"v", v}, {"gamma", bp.gamma}, {"omega_bar", bp.omega_bar}, {"k", bp.k},
                  {"measured_Qdot", c0.ergocenter_velocity},
                  {"measured_center_velocity", code == ok ? (energy_center(st, rc.pot) - x_start) / T : 0.0}};
  }
  if (kind) {
    StabilityVerdict sv;
    sv.omega0 = gs.sw.omega;
    sv.basis = "dynamics";
    sv.epsilon_used = eps;
    sv.horizon_T = T;
    sv.bound_K = cfg.num("stability.K");
    sv.tolerance = sv.bound_K * eps;
    sv.max_orbital_distance = code == ok ? sup : std::numeric_limits<double>::infinity();
    sv.verdict = code == ok && sup <= sv.tolerance ? Verdict::stable : Verdict::unstable;
    j["perturbation"] = {{"kind", to_string(*kind)}, {"eps", eps}};
    j["verdict"] = verdict_json(sv);
    io::write_json(dir / "verdict.json", verdict_json(sv));
  }
  if (code == blow_up) j["blow_up_time"] = blow_time;
  j["config"] = io::config_json(cfg);
  io::write_json(dir / "evolve.json", j);
  log << "evolve: T=" << st.time << " energy drift=" << dE << " charge drift=" << dC << " max distance=" << sup << "\n";
  if (code == blow_up) log << "blow-up at t=" << blow_time << "\n";
  return code;
}

inline int cmd_stability(const Config& cfg, std::ostream& log) {
  const RunConfig rc = resolve(cfg);
  const GroundState gs = solve_ground_state(cfg, rc);
  if (!gs.certified) {
    log << "ground state not certified\n";
    return solver;
  }
  const double w0 = gs.sw.omega, step = cfg.num("stability.d_step");
  if (!(step > 0.0)) throw ArgumentError("stability.d_step must be positive");
  std::vector<double> omegas;
  for (int k = -2; k <= 2; ++k) omegas.push_back(w0 + k * step);
  if (omegas.front() <= 0.0 || omegas.back() >= 1.0) throw ArgumentError("omega too close to the ends of (0, 1)");
  const DispersionTable t = parallel_d_curve(rc.pot, omegas, rc.grid, rc.threads);
  json j;
  j["ground_state"] = ground_state_json(gs);
  StabilityVerdict conv;
  if (t.rows.size() == omegas.size()) {
    conv = convexity_check(t, w0, cfg.num("stability.d_tol"));
  } else {
    conv.omega0 = w0;
    conv.basis = "convexity";
    conv.tolerance = cfg.num("stability.d_tol");
  }
  PerturbationOptions po;
  po.K = cfg.num("stability.K");
  const auto pr = perturbation_experiment(gs, cfg.num("stability.eps"), cfg.num("stability.T"), rc.pot, nullptr,
                                          parse_perturbation_kind(cfg.str("stability.kind")), po);
  const Verdict combined = conv.verdict == pr.verdict.verdict ? conv.verdict : Verdict::inconclusive;
  j["convexity"] = verdict_json(conv);
  j["dynamics"] = verdict_json(pr.verdict);
  j["dynamics"]["kind"] = cfg.str("stability.kind");
  j["dynamics"]["blew_up"] = pr.blew_up;
  j["combined"] = to_string(combined);
  j["config"] = io::config_json(cfg);
  const auto dir = io::prepare_dir(rc.out);
  io::write_json(dir / "stability.json", j);
  io::CsvWriter csv(dir / "stability_series.csv", cfg, {"t", "E", "C", "P", "Qdot", "orbital_distance", "V", "max_abs_psi"});
  for (const auto& r : pr.series) csv.row({r.t, r.E, r.C, r.P, r.Qdot, r.distance, r.V, r.max_abs});
  log << "stability omega=" << w0 << " d''=" << conv.d_second << " (" << to_string(conv.verdict)
      << "), dynamics max distance=" << pr.verdict.max_orbital_distance << " (" << to_string(pr.verdict.verdict)
      << "), combined " << to_string(combined) << "\n";
  return ok;
}

/// Runs a subcommand and maps library errors to exit codes.
inline int run(const std::string& command, const Config& cfg, std::ostream& log, std::ostream& err) {
  try {
    if (command == "check-potential") return cmd_check_potential(cfg, log);
    if (command == "ground-state") return cmd_ground_state(cfg, log);
    if (command == "sweep") return cmd_sweep(cfg, log);
    if (command == "evolve") return cmd_evolve(cfg, log);
    if (command == "stability") return cmd_stability(cfg, log);
    err << "unknown command '" << command << "'\n";
    return usage;
  } catch (const HypothesisError& e) {
    err << "hypothesis failed: " << e.what() << "\n";
    return hypothesis_failed;
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << "\n";
    return usage;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return usage;
  } catch (const BlowUpError& e) {
    err << "blow-up: " << e.what() << "\n";
    return blow_up;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << "\n";
    return solver;
  }
}

}  // namespace nkg::cli
