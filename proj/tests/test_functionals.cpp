#include <gtest/gtest.h>

#include <random>

#include "nkg/functionals.hpp"
#include "nkg/numerics.hpp"
#include "oracle.hpp"

using namespace nkg;

namespace {

// Frozen reference values (checked against the oracle in OracleValues below).
constexpr double kSechE = 1.824, kSechC = -1.92, kSechRho = 2.4, kSechJ = -0.144;
constexpr double kSechAlpha = 0.88, kSechLambda = 0.95;
constexpr double kPlateauMass = 14.0 / 3.0, kPlateauGrad = 2.0, kPlateauDoubleWellW = 1.0 / 30.0;
constexpr double kPlateauEnergyOmega1 = 101.0 / 30.0;  // 1 + 7/3 + 1/30
constexpr double kPlateauAlpha = 31.0 / 70.0;          // (1 + 1/30) / (7/3)
constexpr double kPlateauQuarticJ = -0.1;              // 1 - 1 - 1/10
constexpr double kTentMass = 2.0 / 3.0;

Profile sech_profile(double omega, const GridPtr& g) {
  oracle::Sech s{omega};
  std::vector<double> u(g->size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = s.u(g->node(i));
  return Profile(g, std::move(u));
}

Profile random_profile(std::mt19937_64& rng, const GridPtr& g) {
  std::uniform_real_distribution<double> amp(0.1, 1.5), width(0.5, 4.0), centre(0.0, 5.0);
  const double a = amp(rng), w = width(rng), c = centre(rng), b = amp(rng);
  std::vector<double> u(g->size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = g->node(i);
    u[i] = a * std::exp(-r * r / (w * w)) + 0.3 * b * std::exp(-(r - c) * (r - c));
  }
  return Profile(g, std::move(u));
}

}  // namespace

TEST(OracleValues, SechClosedFormsAgreeWithQuadrature) {
  const oracle::Sech s{0.8};
  EXPECT_NEAR(s.mass_quad(), kSechRho, 1e-10);
  EXPECT_NEAR(s.energy_quad(), kSechE, 1e-10);
  EXPECT_NEAR(s.J_quad(), kSechJ, 1e-10);
  EXPECT_NEAR(s.energy(), kSechE, 1e-12);
  EXPECT_NEAR(s.charge(), kSechC, 1e-12);
  EXPECT_NEAR(s.alpha(), kSechAlpha, 1e-12);
  EXPECT_NEAR(s.energy() / std::abs(s.charge()), kSechLambda, 1e-12);
  for (double w : {0.6, 0.7, 0.9, 0.95}) {
    const oracle::Sech t{w};
    EXPECT_NEAR(t.mass_quad(), t.mass(), 1e-9);
    EXPECT_NEAR(t.energy_quad(), t.energy(), 1e-9);
    EXPECT_NEAR(t.J_quad(), t.J(), 1e-9);
    // E = J + rho/2 + C^2/(2 rho) for the exact solution.
    EXPECT_NEAR(t.J() + 0.5 * t.mass() + t.charge() * t.charge() / (2 * t.mass()), t.energy(), 1e-12);
  }
}

TEST(OracleValues, PlateauIntegrals) {
  const oracle::Plateau p{1.0, 2.0};
  EXPECT_NEAR(p.mass(), kPlateauMass, 1e-12);
  EXPECT_NEAR(p.grad2(), kPlateauGrad, 1e-15);
  const double W = p.integrate([&](double x) {
    const double v = p.u(x);
    return 0.5 * v * v * (1 - v) * (1 - v);
  });
  EXPECT_NEAR(W, kPlateauDoubleWellW, 1e-12);
  EXPECT_NEAR(0.5 * p.grad2() + 0.5 * p.mass() + W, kPlateauEnergyOmega1, 1e-12);
  EXPECT_NEAR((0.5 * p.grad2() + W) / (0.5 * p.mass()), kPlateauAlpha, 1e-12);
  const double R4 = p.integrate([&](double x) { return -0.25 * std::pow(p.u(x), 4); });
  EXPECT_NEAR(0.5 * p.grad2() + R4, kPlateauQuarticJ, 1e-12);
  EXPECT_NEAR((oracle::Plateau{1.0, 0.0}.mass()), kTentMass, 1e-12);
}

// ---------------------------------------------------------------------------
// Grid

TEST(Grid, WeightsReproduceBallVolume) {
  for (int N = 1; N <= 6; ++N) {
    const auto g = make_radial_grid(N, 7.5, 1501);
    double sum = 0.0;
    for (double w : g->weights()) {
      EXPECT_GT(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum / ball_volume(N, 7.5), 1.0, 1e-8) << "N=" << N;
  }
}

TEST(Grid, LineGridsIntegrateConstantsExactly) {
  const auto p = make_line_grid(10.0, 200, true);
  const auto o = make_line_grid(10.0, 201, false);
  std::vector<double> one(200, 1.0), one_o(201, 1.0);
  EXPECT_NEAR(p->integrate(one), 20.0, 1e-12);
  EXPECT_NEAR(o->integrate(one_o), 20.0, 1e-12);
}

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(Grid::radial(0, 1.0, 10), ArgumentError);
  EXPECT_THROW(Grid::radial(1, -1.0, 10), ArgumentError);
  EXPECT_THROW(Grid::radial(1, 1.0, 2), ArgumentError);
  EXPECT_THROW(Grid::line(1.0, 3, true), ArgumentError);
}

TEST(Grid, LaplacianIsSecondOrderOnSmoothRadialData) {
  // u = exp(-r^2) in N dimensions: Lap u = (4 r^2 - 2N) exp(-r^2).
  for (int N : {1, 2, 3}) {
    double prev = 0.0;
    for (std::size_t nodes : {801, 1601}) {
      const auto g = make_radial_grid(N, 8.0, nodes);
      std::vector<double> u(nodes);
      for (std::size_t i = 0; i < nodes; ++i) u[i] = std::exp(-g->node(i) * g->node(i));
      const auto lap = g->laplacian<double>(u);
      double err = 0.0;
      for (std::size_t i = 0; i + 1 < nodes; ++i) {
        const double r = g->node(i);
        err = std::max(err, std::abs(lap[i] - (4 * r * r - 2 * N) * std::exp(-r * r)));
      }
      if (prev > 0.0) {
        EXPECT_GT(prev / err, 3.0) << "N=" << N;
      }
      prev = err;
    }
  }
}

// ---------------------------------------------------------------------------
// Energy, charge, alpha, Lambda, J

TEST(Energy, ZeroProfileHasZeroEnergyAndCharge) {
  const auto g = make_radial_grid(1);
  const StandingWave sw(Profile::zero(g), 0.7);
  EXPECT_EQ(energy_Y(sw, power_potential(4)), 0.0);
  EXPECT_EQ(charge_Y(sw), 0.0);
  EXPECT_EQ(functional_J(sw.profile, power_potential(4)), 0.0);
}

TEST(Energy, SechSoliton) {
  const auto g = make_radial_grid(1);
  const StandingWave sw(sech_profile(0.8, g), 0.8);
  const auto pot = power_potential(4);
  EXPECT_NEAR(energy_Y(sw, pot), kSechE, 2e-3);
  EXPECT_NEAR(charge_Y(sw), kSechC, 1e-3);
  EXPECT_NEAR(alpha(sw.profile, pot), kSechAlpha, 1e-3);
  EXPECT_NEAR(lambda_ratio(sw, pot), kSechLambda, 1e-3);
  EXPECT_NEAR(lambda_ratio(sw, pot), energy_Y(sw, pot) / std::abs(charge_Y(sw)), 1e-12);
  EXPECT_NEAR(functional_J(sw.profile, pot), kSechJ, 2e-3);
}

TEST(Energy, PlateauOnTheLine) {
  const auto g = make_radial_grid(1, 10.0, 10001);
  const Profile p = plateau_profile(1.0, 2.0, g);
  EXPECT_NEAR(mass(p), kPlateauMass, 1e-5);
  EXPECT_NEAR(gradient_integral(*g, p.u), kPlateauGrad, 1e-9);
  EXPECT_NEAR(energy_Y(StandingWave(p, 1.0), double_well_potential()), kPlateauEnergyOmega1, 1e-5);
  EXPECT_NEAR(charge_Y(StandingWave(p, 0.5)), -7.0 / 3.0, 1e-3);
  EXPECT_NEAR(alpha(p, double_well_potential()), kPlateauAlpha, 1e-3);
  EXPECT_NEAR(mass(plateau_profile(1.0, 0.0, g)), kTentMass, 1e-5);
  EXPECT_NEAR(functional_J(p, saturate(power_potential(4), 1.2)), kPlateauQuarticJ, 1e-5);
}

TEST(Energy, NonFinitePotentialReportsTheNode) {
  const auto g = make_radial_grid(1, 10.0, 101);
  const ScalarPotential bad("bad", [](double s) {
    return PotentialValue{s > 0.5 ? std::nan("") : 0.5 * s * s, s, 1.0};
  });
  std::vector<double> u(101, 0.0);
  u[7] = 1.0;
  try {
    energy_Y(StandingWave(Profile(g, u), 0.5), bad);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.node(), 7u);
  }
}

TEST(Energy, ProfileValidation) {
  const auto g = make_radial_grid(1, 10.0, 101);
  std::vector<double> u(101, 0.1);
  u[3] = -0.1;
  EXPECT_THROW(energy_Y(StandingWave(Profile(g, u), 0.5), power_potential(4)), ArgumentError);
  EXPECT_THROW(StandingWave(Profile(g, std::vector<double>(101, 0.1)), 0.0), ArgumentError);
  EXPECT_THROW(alpha(Profile::zero(g), power_potential(4)), DomainError);
  EXPECT_THROW(lambda_ratio(Profile(g, std::vector<double>(101, 0.1)), -1.0, power_potential(4)), ArgumentError);
}

TEST(Lambda, UnitAlphaAtUnitFrequency) {
  // alpha(u) = 1 exactly for the linear potential with a constant profile (no gradient).
  const auto g = make_radial_grid(1, 10.0, 101);
  const Profile p(g, std::vector<double>(101, 0.3));
  EXPECT_NEAR(alpha(p, linear_potential()), 1.0, 1e-14);
  EXPECT_NEAR(lambda_ratio(p, 1.0, linear_potential()), 1.0, 1e-14);
}

TEST(Properties, EnergyDecompositionOnRandomProfiles) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> om(0.05, 1.5);
  const auto pots = {power_potential(4), double_well_potential(), saturate(power_potential(3), 1.0)};
  for (int N : {1, 2, 3}) {
    const auto g = make_radial_grid(N, 20.0, 801);
    for (const auto& pot : pots)
      for (int i = 0; i < 23; ++i) {
        const StandingWave sw(random_profile(rng, g), om(rng));
        const double E = energy_Y(sw, pot), C = charge_Y(sw), rho = mass(sw.profile);
        const double J = functional_J(sw.profile, pot);
        EXPECT_NEAR(J + 0.5 * rho + C * C / (2 * rho), E, 1e-10 * std::abs(E));
        EXPECT_NEAR(lambda_ratio(sw, pot) * std::abs(C), E, 1e-10 * std::abs(E));
        EXPECT_LT(C, 0.0);
      }
  }
}

TEST(Properties, LambdaMinimumOverFrequencyIsSqrtAlpha) {
  std::mt19937_64 rng(99);
  const auto g = make_radial_grid(1, 20.0, 801);
  const auto pot = double_well_potential();
  for (int i = 0; i < 20; ++i) {
    const Profile p = random_profile(rng, g);
    const double a = alpha(p, pot);
    ASSERT_GT(a, 0.0);
    const auto m = numerics::golden_section([&](double w) { return lambda_ratio(p, w, pot); }, 1e-3, 10.0, 1e-10);
    EXPECT_NEAR(m.fx, std::sqrt(a), 1e-8);
    EXPECT_NEAR(m.x, std::sqrt(a), 1e-4);
  }
}

TEST(Properties, QuadratureConvergesAtSecondOrder) {
  const oracle::Sech s{0.8};
  const auto pot = power_potential(4);
  auto err = [&](std::size_t nodes) {
    const auto g = make_radial_grid(1, 40.0, nodes);
    return std::abs(energy_Y(StandingWave(sech_profile(0.8, g), 0.8), pot) - s.energy());
  };
  const double e1 = err(401), e2 = err(801), e3 = err(1601);
  EXPECT_NEAR(e1 / e2, 4.0, 0.5);
  EXPECT_NEAR(e2 / e3, 4.0, 0.5);
}

// ---------------------------------------------------------------------------
// Trial families

TEST(Plateau, RequiresRoomForTheRamp) {
  const auto g = make_radial_grid(1, 5.0, 501);
  EXPECT_THROW(plateau_profile(1.0, 4.5, g), ArgumentError);
  EXPECT_NO_THROW(plateau_profile(1.0, 4.0, g));
  EXPECT_THROW(scaled_plateau(1.0, 3.0, g), ArgumentError);
}

TEST(Plateau, AlphaApproachesAlpha0ForTheDoubleWell) {
  const auto g = make_radial_grid(1, 101.0, 10101);
  const auto pot = double_well_potential();
  double prev = 1e300;
  for (double R : {1.0, 5.0, 20.0, 50.0, 100.0}) {
    const double a = alpha(plateau_profile(1.0, R, g), pot);
    EXPECT_LT(a, prev);
    prev = a;
  }
  EXPECT_LT(prev, 0.011);
}

TEST(ScaledPlateau, MassIsScaleInvariantOnDilatedGrids) {
  // With h proportional to R the lumped quadrature is exactly scale invariant.
  for (int N : {1, 2, 3}) {
    const auto g1 = make_radial_grid(N, 2.0, 2001);
    const auto g4 = make_radial_grid(N, 8.0, 2001);
    const double m1 = mass(scaled_plateau(1.0, 1.0, g1));
    const double m4 = mass(scaled_plateau(1.0, 4.0, g4));
    EXPECT_NEAR(m4 / m1, 1.0, 1e-10) << "N=" << N;
  }
  // On one common grid the invariance holds up to discretization error.
  const auto g = make_radial_grid(1, 10.0, 10001);
  EXPECT_NEAR(mass(scaled_plateau(1.0, 4.0, g)) / mass(scaled_plateau(1.0, 1.0, g)), 1.0, 1e-5);
}

TEST(ScaledPlateau, GammaMatchesTargetCharge) {
  const auto g = make_radial_grid(1, 20.0, 2001);
  const double R = 3.0;
  const double gamma = scaled_plateau_gamma_for_charge(-0.5, R, g, 1.0);
  const double m = mass(scaled_plateau(1.0, R, g));
  EXPECT_NEAR(gamma, std::sqrt(0.5 / m), 1e-14);
  EXPECT_NEAR(charge_Y(StandingWave(scaled_plateau(gamma, R, g), 1.0)), -0.5, 1e-12);
  EXPECT_NEAR(scaled_plateau_gamma_for_charge(-1.0, R, g) / gamma, std::sqrt(2.0), 1e-12);
  EXPECT_THROW(scaled_plateau_gamma_for_charge(0.0, R, g), ArgumentError);
}

TEST(ScaledPlateau, JTendsToZeroFromBelowUnderNearZeroHypothesis) {
  const auto pot = power_potential(4);
  const auto g = make_radial_grid(1, 400.0, 40001);
  double prev = -1e300;
  const double first = functional_J(scaled_plateau(1.0, 10.0, g), pot);
  for (double R : {10.0, 20.0, 50.0, 100.0, 200.0}) {
    const double J = functional_J(scaled_plateau(1.0, R, g), pot);
    EXPECT_LT(J, 0.0) << "R=" << R;
    EXPECT_GT(J, prev) << "R=" << R;
    prev = J;
  }
  // The quartic term scales like 1/R in one dimension.
  EXPECT_LT(std::abs(prev), std::abs(first) / 15.0);
}
