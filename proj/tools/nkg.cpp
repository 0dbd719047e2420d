// nkg: command-line front end for the standing-wave laboratory.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nkg/cli.hpp"

extern char** environ;

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

const std::vector<Flag> kCommon = {
    {"--potential", "potential.name", "power(p), double-well, linear or saturate(<spec>, sbar)"},
    {"--saturate", "potential.saturate", "saturation level sbar"},
    {"--N", "geometry.N", "space dimension of the radial grid"},
    {"--r-max", "geometry.r_max", "radial extent"},
    {"--nodes", "geometry.nodes", "radial grid nodes"},
    {"--tol", "solver.tol", "sphere-flow tolerance"},
    {"--max-iter", "solver.max_iter", "sphere-flow iteration cap"},
    {"--residual-tol", "solver.residual_tol", "certification residual tolerance"},
    {"--multiplier-tol", "solver.multiplier_tol", "certification multiplier tolerance"},
};

const std::vector<Flag> kState = {
    {"--omega", "run.omega", "frequency in (0, 1)"},
    {"--charge", "run.charge", "charge (negative)"},
};

const std::map<std::string, std::vector<Flag>> kCommandFlags = {
    {"check-potential", {}},
    {"ground-state", kState},
    {"sweep",
     {{"--omega-min", "sweep.omega_min", "first frequency"},
      {"--omega-max", "sweep.omega_max", "last frequency"},
      {"--omega-step", "sweep.omega_step", "frequency spacing"}}},
    {"evolve",
     {{"--T", "evolve.T", "horizon"},
      {"--dt-factor", "evolve.dt_factor", "time step as a fraction of h (<= 0.5)"},
      {"--velocity", "evolve.velocity", "Lorentz boost velocity"},
      {"--perturb", "evolve.perturb", "kind:eps with kind in bump, phase, kick"},
      {"--sample-dt", "evolve.sample_dt", "spacing of trajectory rows"},
      {"--snapshot-stride", "evolve.snapshot_stride", "steps between field snapshots (0 = none)"},
      {"--boundary", "geometry.boundary", "auto, periodic or open"},
      {"--K", "stability.K", "stability bound factor"}}},
    {"stability",
     {{"--eps", "stability.eps", "perturbation size"},
      {"--T", "stability.T", "horizon"},
      {"--K", "stability.K", "stability bound factor"},
      {"--kind", "stability.kind", "bump, phase or kick"},
      {"--d-step", "stability.d_step", "frequency spacing of the convexity test"},
      {"--d-tol", "stability.d_tol", "convexity tolerance"}}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Standing waves and solitons of the nonlinear Klein-Gordon equation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> given;  // key -> value from flags

  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", given["output.out"], "output directory");
  app.add_option("--threads", given["output.threads"], "worker threads for sweeps");
  app.add_option("--set", sets, "override any config key: section.key=value");

  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, flags] : kCommandFlags) {
    CLI::App* sub = app.add_subcommand(name);
    subs[name] = sub;
    std::vector<Flag> all = kCommon;
    if (name == "evolve" || name == "stability") all.insert(all.end(), kState.begin(), kState.end());
    all.insert(all.end(), flags.begin(), flags.end());
    for (const auto& f : all) sub->add_option(f.name, given[f.key], f.help);
  }
  subs["check-potential"]->description("check the hypotheses on a potential (exit 1 if it admits no solitons)");
  subs["ground-state"]->description("compute a ground state at fixed frequency or charge");
  subs["sweep"]->description("tabulate d(omega) = E + omega C");
  subs["evolve"]->description("evolve a ground state, boosted or perturbed");
  subs["stability"]->description("convexity and dynamical stability tests");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return nkg::cli::usage;
  }

  std::string command;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) command = name;

  nkg::Config cfg = nkg::Config::defaults();
  try {
    if (!config_path.empty()) cfg.merge_file(config_path);
    cfg.merge_environment(environ);
    for (const auto& [key, value] : given)
      if (!value.empty()) cfg.set(key, value, "command line");
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw nkg::ArgumentError("--set expects section.key=value");
      cfg.set(nkg::detail::trim(s.substr(0, eq)), nkg::detail::trim(s.substr(eq + 1)), "--set");
    }
  } catch (const nkg::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return nkg::cli::usage;
  }
  return nkg::cli::run(command, cfg, std::cout, std::cerr);
}
