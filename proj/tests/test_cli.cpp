#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nkg/cli.hpp"

using namespace nkg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(NKG_TEST_TMP) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> data_lines(const fs::path& p) {
  std::ifstream f(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(f, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

Config config_for(const fs::path& out, std::initializer_list<std::pair<const char*, const char*>> kv) {
  Config c = Config::defaults();
  c.set("output.out", out.string());
  for (const auto& [k, v] : kv) c.set(k, v);
  return c;
}

int run(const std::string& cmd, const Config& c) {
  std::ostringstream log, err;
  return cli::run(cmd, c, log, err);
}

io::json read_json(const fs::path& p) { return io::json::parse(slurp(p)); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, ParsesSectionsAndComments) {
  Config c = Config::defaults();
  c.merge_text("# comment\n[potential]\nname = double-well ; trailing\n\n[geometry]\nN=3\nr_max = 25\n", "test");
  EXPECT_EQ(c.str("potential.name"), "double-well");
  EXPECT_EQ(c.integer("geometry.N"), 3);
  EXPECT_DOUBLE_EQ(c.num("geometry.r_max"), 25.0);
}

TEST(Config, RejectsMalformedInput) {
  Config c = Config::defaults();
  EXPECT_THROW(c.merge_text("[geometry]\nnodez = 3\n", "f"), ArgumentError);
  EXPECT_THROW(c.merge_text("[geometry\nN = 3\n", "f"), ArgumentError);
  EXPECT_THROW(c.merge_text("[geometry]\nN 3\n", "f"), ArgumentError);
  try {
    c.merge_text("\n\n[solver]\nbogus = 1\n", "my.conf");
    FAIL();
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("my.conf:4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(c.merge_file("/nonexistent/file.conf"), ArgumentError);
}

TEST(Config, TypedAccess) {
  Config c = Config::defaults();
  EXPECT_FALSE(c.has("run.omega"));
  EXPECT_THROW(c.num("run.omega"), ArgumentError);
  c.set("geometry.N", "2.5");
  EXPECT_THROW(c.integer("geometry.N"), ArgumentError);
  c.set("solver.tol", "abc");
  EXPECT_THROW(c.num("solver.tol"), ArgumentError);
  EXPECT_THROW(c.str("no.such"), ArgumentError);
  EXPECT_THROW(c.set("no.such", "1"), ArgumentError);
}

TEST(Config, EnvironmentOverridesFile) {
  Config c = Config::defaults();
  c.merge_text("[stability]\nT = 30\n", "file");
  std::string a = "NKG_STABILITY_T=12", b = "PATH=/bin", d = "NKG_OUTPUT_THREADS=4";
  char* env[] = {a.data(), b.data(), d.data(), nullptr};
  c.merge_environment(env);
  EXPECT_DOUBLE_EQ(c.num("stability.T"), 12.0);
  EXPECT_EQ(c.integer("output.threads"), 4);
  c.set("stability.T", "7");  // command line wins
  EXPECT_DOUBLE_EQ(c.num("stability.T"), 7.0);
  std::string bad = "NKG_NOT_A_KEY=1";
  char* env2[] = {bad.data(), nullptr};
  EXPECT_THROW(c.merge_environment(env2), ArgumentError);
}

TEST(Config, DumpRoundTrips) {
  Config c = Config::defaults();
  c.set("potential.name", "saturate(power(4), 1.2)");
  c.set("run.omega", "0.8");
  Config d = Config::defaults();
  d.merge_text(c.dump(), "dump");
  EXPECT_EQ(d.values(), c.values());
}

TEST(Config, ResolveValidates) {
  Config c = Config::defaults();
  c.set("geometry.nodes", "32");
  EXPECT_THROW(cli::resolve(c), ArgumentError);
  c = Config::defaults();
  c.set("solver.tol", "0");
  EXPECT_THROW(cli::resolve(c), ArgumentError);
  c = Config::defaults();
  c.set("potential.name", "quintic");
  EXPECT_THROW(cli::resolve(c), ArgumentError);
  c = Config::defaults();
  c.set("potential.saturate", "1.2");
  EXPECT_TRUE(cli::resolve(c).pot.sbar());
}

TEST(Io, SeventeenDigitsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -1.92, 6.02214076e23, 5e-324}) EXPECT_EQ(std::strtod(io::fmt(v).c_str(), nullptr), v);
  EXPECT_EQ(io::num(std::nan("")), "nan");
  EXPECT_EQ(io::num(-INFINITY), "-inf");
}

// ---------------------------------------------------------------------------
// Subcommands

TEST(Cli, CheckPotentialExitCodesAndReport) {
  const auto out = scratch("check");
  EXPECT_EQ(run("check-potential", config_for(out, {{"potential.name", "double-well"}})), 0);
  const auto j = read_json(out / "hypotheses.json");
  EXPECT_TRUE(j["admits_solitons"].get<bool>());
  EXPECT_LE(j["alpha0"].get<double>(), 1e-6);
  EXPECT_EQ(run("check-potential", config_for(out, {{"potential.name", "linear"}})), 1);
  EXPECT_FALSE(read_json(out / "hypotheses.json")["h1_ok"].get<bool>());
  EXPECT_EQ(run("check-potential", config_for(out, {{"potential.name", "power(4)"}})), 1);
  EXPECT_FALSE(read_json(out / "hypotheses.json")["h2_ok"].get<bool>());
  EXPECT_EQ(run("check-potential", config_for(out, {{"potential.name", "nonsense"}})), 2);
  EXPECT_EQ(run("frobnicate", config_for(out, {})), 2);
}

TEST(Cli, GroundStateByFrequency) {
  const auto out = scratch("gs_omega");
  ASSERT_EQ(run("ground-state", config_for(out, {{"potential.saturate", "1.2"}, {"run.omega", "0.8"}})), 0);
  const auto j = read_json(out / "ground_state.json");
  EXPECT_DOUBLE_EQ(j["omega"].get<double>(), 0.8);
  EXPECT_NEAR(j["charge"].get<double>(), -1.92, 1e-3);
  EXPECT_NEAR(j["lambda"].get<double>(), -0.8, 1e-3);
  EXPECT_TRUE(j["certified"].get<bool>());
  for (const char* k : {"energy", "Lambda", "residual"}) EXPECT_TRUE(j.contains(k)) << k;
  const auto rows = data_lines(out / "profile.csv");
  ASSERT_EQ(rows.size(), 4002u);
  EXPECT_EQ(rows[0], "r,u");
  EXPECT_NE(slurp(out / "profile.csv").find("# [potential]"), std::string::npos);
}

TEST(Cli, GroundStateByCharge) {
  const auto out = scratch("gs_charge");
  ASSERT_EQ(run("ground-state", config_for(out, {{"potential.saturate", "1.2"}, {"run.charge", "-1.92"}})), 0);
  EXPECT_NEAR(read_json(out / "ground_state.json")["omega"].get<double>(), 0.8, 1e-3);
}

TEST(Cli, GroundStateArgumentErrors) {
  const auto out = scratch("gs_err");
  EXPECT_EQ(run("ground-state", config_for(out, {{"run.omega", "0.8"}, {"run.charge", "-1"}})), 2);
  EXPECT_EQ(run("ground-state", config_for(out, {})), 2);
  EXPECT_EQ(run("ground-state", config_for(out, {{"run.omega", "1.2"}})), 2);
  EXPECT_EQ(run("ground-state", config_for(out, {{"run.charge", "0"}})), 2);
  EXPECT_EQ(run("ground-state", config_for(out, {{"potential.name", "linear"}, {"run.omega", "0.8"}})), 3);
}

TEST(Cli, SweepWritesOrderedTable) {
  const auto out = scratch("sweep");
  ASSERT_EQ(run("sweep", config_for(out, {{"sweep.omega_min", "0.6"}, {"sweep.omega_max", "0.8"},
                                          {"sweep.omega_step", "0.01"}, {"output.threads", "3"}})),
            0);
  const auto rows = data_lines(out / "dispersion.csv");
  ASSERT_EQ(rows.size(), 22u);
  EXPECT_EQ(rows[0], "omega,charge,energy,d,Lambda");
  double prev = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double w = std::stod(rows[i].substr(0, rows[i].find(',')));
    EXPECT_GT(w, prev);
    prev = w;
  }
  const auto j = read_json(out / "sweep.json");
  EXPECT_NEAR(j["convexity_flip"].get<double>(), 1.0 / std::sqrt(2.0), 0.01);
  EXPECT_DOUBLE_EQ(j["reference_power_window"]["p_max"].get<double>(), 6.0);
  EXPECT_EQ(run("sweep", config_for(out, {{"potential.name", "linear"}, {"sweep.omega_min", "0.5"},
                                          {"sweep.omega_max", "0.6"}, {"sweep.omega_step", "0.05"}})),
            3);
}

TEST(Cli, SweepIsIndependentOfThreadCount) {
  const auto a = scratch("sweep_t1"), b = scratch("sweep_t4");
  auto cfg = [&](const fs::path& o, const char* t) {
    return config_for(o, {{"sweep.omega_min", "0.7"}, {"sweep.omega_max", "0.9"}, {"sweep.omega_step", "0.02"},
                          {"output.threads", t}});
  };
  ASSERT_EQ(run("sweep", cfg(a, "1")), 0);
  ASSERT_EQ(run("sweep", cfg(b, "4")), 0);
  EXPECT_EQ(data_lines(a / "dispersion.csv"), data_lines(b / "dispersion.csv"));
}

TEST(Cli, ReproducibleOutputs) {
  const auto a = scratch("repro_a"), b = scratch("repro_b");
  auto cfg = [](const fs::path& o) {
    Config c = config_for(o, {{"potential.saturate", "1.2"}, {"run.omega", "0.8"}, {"evolve.T", "2"}});
    c.set("output.out", "same");  // keep the dumped configuration identical
    return c;
  };
  for (const auto& dir : {a, b}) {
    const auto cwd = fs::current_path();
    fs::create_directories(dir);
    fs::current_path(dir);
    EXPECT_EQ(run("ground-state", cfg(dir)), 0);
    EXPECT_EQ(run("evolve", cfg(dir)), 0);
    fs::current_path(cwd);
  }
  for (const char* f : {"profile.csv", "ground_state.json", "trajectory.csv", "evolve.json"})
    EXPECT_EQ(slurp(a / "same" / f), slurp(b / "same" / f)) << f;
}

TEST(Cli, EvolveStandingWaveConserves) {
  const auto out = scratch("evolve");
  ASSERT_EQ(run("evolve", config_for(out, {{"potential.saturate", "1.2"}, {"run.omega", "0.8"}, {"evolve.T", "20"}})), 0);
  const auto j = read_json(out / "evolve.json");
  EXPECT_LE(j["relative_energy_drift"].get<double>(), 1e-5);
  EXPECT_LE(j["relative_charge_drift"].get<double>(), 1e-5);
  EXPECT_EQ(j["boundary"], "periodic");
  EXPECT_FALSE(fs::exists(out / "verdict.json"));
}

TEST(Cli, EvolveBoostAndPerturbation) {
  const auto out = scratch("boost");
  ASSERT_EQ(run("evolve", config_for(out, {{"potential.saturate", "1.2"}, {"run.omega", "0.8"}, {"evolve.T", "10"},
                                           {"evolve.velocity", "0.5"}, {"evolve.snapshot_stride", "500"}})),
            0);
  const auto j = read_json(out / "evolve.json");
  EXPECT_EQ(j["boundary"], "open");
  EXPECT_NEAR(j["boost"]["measured_Qdot"].get<double>(), 0.5, 1e-2);
  EXPECT_NEAR(j["boost"]["measured_center_velocity"].get<double>(), 0.5, 2e-2);
  EXPECT_TRUE(fs::exists(out / "snapshots.csv"));

  const auto pout = scratch("perturbed");
  ASSERT_EQ(run("evolve", config_for(pout, {{"potential.saturate", "1.2"}, {"run.omega", "0.8"}, {"evolve.T", "10"},
                                            {"evolve.perturb", "kick:0.01"}})),
            0);
  const auto v = read_json(pout / "verdict.json");
  EXPECT_EQ(v["verdict"], "stable");
  EXPECT_DOUBLE_EQ(v["epsilon"].get<double>(), 0.01);
  EXPECT_EQ(run("evolve", config_for(pout, {{"run.omega", "0.8"}, {"evolve.perturb", "kick"}})), 2);
  EXPECT_EQ(run("evolve", config_for(pout, {{"run.omega", "0.8"}, {"evolve.perturb", "kick:0.5"}})), 2);
  EXPECT_EQ(run("evolve", config_for(pout, {{"run.omega", "0.8"}, {"evolve.dt_factor", "0.6"}})), 2);
}

TEST(Cli, EvolveBlowUpKeepsPartialTrajectory) {
  const auto out = scratch("blowup");
  EXPECT_EQ(run("evolve", config_for(out, {{"run.omega", "0.6"}, {"evolve.perturb", "bump:0.09"}, {"evolve.T", "30"}})),
            4);
  const auto rows = data_lines(out / "trajectory.csv");
  EXPECT_GT(rows.size(), 2u);
  const auto j = read_json(out / "evolve.json");
  EXPECT_GT(j["blow_up_time"].get<double>(), 0.0);
  EXPECT_EQ(read_json(out / "verdict.json")["verdict"], "unstable");
}

TEST(Cli, StabilityCombinesBothTests) {
  const auto out = scratch("stability");
  ASSERT_EQ(run("stability", config_for(out, {{"potential.saturate", "1.2"}, {"run.omega", "0.8"}, {"stability.T", "20"}})),
            0);
  const auto j = read_json(out / "stability.json");
  EXPECT_EQ(j["convexity"]["verdict"], "stable");
  EXPECT_EQ(j["dynamics"]["verdict"], "stable");
  EXPECT_EQ(j["combined"], "stable");
  EXPECT_DOUBLE_EQ(j["dynamics"]["K"].get<double>(), 10.0);
  EXPECT_GT(data_lines(out / "stability_series.csv").size(), 10u);
}
