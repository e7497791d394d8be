#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "glb/observables.hpp"
#include "glb/solver.hpp"
#include "support/fixtures.hpp"

using namespace glb;
using glb::testing::random_state;

TEST(Observables, VortexSetOfVacuumIsEmpty) {
  const Lattice lat = build_lattice(2, {8, 8}, {1.0, 1.0});
  const State s(make_reference_connection(lat, 0));
  const auto rep = vortex_set(s, 0.5);
  EXPECT_TRUE(rep.empty());
  EXPECT_EQ(rep.components, 0u);
  EXPECT_THROW(vortex_set(s, 1.5), RangeError);
  EXPECT_THROW(vortex_set(s, 0.0), RangeError);
}

TEST(Observables, VortexComponentsWrapPeriodically) {
  const Lattice lat = build_lattice(2, {8, 8}, {1.0, 1.0});
  State s(make_reference_connection(lat, 0));
  s.u[lat.vertex_at({0, 3, 0})] = 0.0;
  s.u[lat.vertex_at({7, 3, 0})] = 0.0;  // neighbor across the x seam
  s.u[lat.vertex_at({4, 4, 0})] = 0.0;
  const auto rep = vortex_set(s, 0.5);
  EXPECT_EQ(rep.cells.size(), 3u);
  EXPECT_EQ(rep.components, 2u);
}

TEST(Observables, AnsatzHasOneCoreAndQuantizedCharge) {
  const Lattice lat = build_lattice(2, {32, 32}, {1.0, 1.0});
  const State s = init_state(make_reference_connection(lat, 1), InitMode::VortexAnsatz, 0.1, 0);
  std::size_t small = 0;
  for (const Complex& z : s.u) small += std::abs(z) < 0.1;
  EXPECT_EQ(small, 1u);
  const auto rep = vortex_set(s, 0.5);
  EXPECT_EQ(rep.components, 1u);
  EXPECT_NEAR(rep.slice_charge[0], std::numbers::pi, 1e-11);
}

TEST(Observables, AnsatzPlacesSeparatedCoresForHigherDegree) {
  for (int d : {-3, -2, 2, 3}) {
    const Lattice lat = build_lattice(2, {48, 48}, {1.0, 1.0});
    const State s = init_state(make_reference_connection(lat, d), InitMode::VortexAnsatz, 0.05, 0);
    EXPECT_EQ(vortex_set(s, 0.5).components, static_cast<std::size_t>(std::abs(d))) << d;
    // The phase winds with the sign of the degree: J carries the charge.
    const FormField big_j = jacobian(s).J;
    EXPECT_NEAR(slice_charges(big_j)[0], std::numbers::pi * d, 1e-11);
  }
}

TEST(Observables, ProfileEnergyIsNondecreasingAndMatchesBallSum) {
  const Lattice lat = build_lattice(3, {32, 32, 32}, {1.0, 1.0, 1.0});
  const State s = random_state(make_reference_connection(lat, 1), 4);
  const double h = lat.spacing();
  const std::vector<double> radii{4 * h, 5 * h, 6 * h, 0.25};
  const auto prof = radial_profile(s, 0.2, 0, radii);
  ASSERT_EQ(prof.energy.size(), radii.size());
  for (std::size_t i = 1; i < radii.size(); ++i) {
    EXPECT_GE(prof.energy[i], prof.energy[i - 1]);
    EXPECT_NEAR(prof.energy[i] - prof.energy[i - 1], prof.shell_sum[i], 1e-12 * prof.energy[i]);
  }
  const CellEnergies ce = cell_energies(s, 0.2);
  for (std::size_t i = 0; i < radii.size(); ++i)
    EXPECT_NEAR(prof.energy[i], ball_energy(ce, BallIndex(lat, 0, radii[i])), 1e-12 * prof.energy[i]);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    EXPECT_NEAR(prof.rescaled[i], prof.energy[i] / radii[i], 1e-15 * prof.energy[i] / radii[i]);
    EXPECT_GT(prof.x_term[i], 0.0);
  }
}

TEST(Observables, ProfileRadiiAreValidated) {
  const Lattice lat = build_lattice(2, {16, 16}, {1.0, 1.0});
  const State s(make_reference_connection(lat, 0));
  EXPECT_THROW(radial_profile(s, 0.1, 0, {0.1, 0.4}), RangeError);
  EXPECT_THROW(radial_profile(s, 0.1, 0, {0.01}), RangeError);
  EXPECT_THROW(radial_profile(s, 0.1, 0, {0.2, 0.2}), RangeError);
}

TEST(Observables, UniformDensityProfileIncreasesIn3D) {
  const Lattice lat = build_lattice(3, {32, 32, 32}, {1.0, 1.0, 1.0});
  FormField mass(lat, 0);
  for (double& x : mass.values()) x = 2.5 * lat.cell_weight();
  const double h = lat.spacing();
  std::vector<double> radii;
  for (double r = 4 * h; r <= 0.25 + 1e-12; r += h) radii.push_back(r);
  const auto prof = mass_profile(mass, 0, radii);
  for (std::size_t i = 1; i < radii.size(); ++i) EXPECT_GT(prof.rescaled[i], prof.rescaled[i - 1]);
  EXPECT_EQ(prof.violation, 0.0);
  // Lattice count against the continuum volume within a few percent at the largest radius.
  const double r = radii.back();
  EXPECT_NEAR(prof.energy.back(), 2.5 * 4.0 / 3.0 * std::numbers::pi * r * r * r, 0.05 * prof.energy.back());
}

TEST(Observables, ClearingProbeVacuumPassesVacuously) {
  const Lattice lat = build_lattice(2, {32, 32}, {1.0, 1.0});
  const State s(make_reference_connection(lat, 0));
  const auto rep = clearing_probe(s, 0.1, {0, 100}, 0.25, 0.1);
  ASSERT_EQ(rep.entries.size(), 2u);
  for (const auto& e : rep.entries) {
    EXPECT_TRUE(e.hypothesis);
    EXPECT_TRUE(e.pass);
    EXPECT_EQ(e.min_u, 1.0);
  }
  EXPECT_THROW(clearing_probe(s, 0.1, {0}, 0.1, 0.1), RangeError);   // below 8h
  EXPECT_THROW(clearing_probe(s, 0.3, {0}, 0.25, 0.1), RangeError);  // eps >= R
}

TEST(Observables, ClearingProbeFlagsCoreInsideLowEnergyBall) {
  const Lattice lat = build_lattice(2, {32, 32}, {1.0, 1.0});
  State s(make_reference_connection(lat, 0));
  s.u[0] = 0.0;
  const auto rep = clearing_probe(s, 0.01, {0}, 0.25, 1e6);
  EXPECT_TRUE(rep.entries[0].hypothesis);
  EXPECT_FALSE(rep.entries[0].pass);
}

TEST(Observables, CurvatureDecayDegenerateAndUniform) {
  const Lattice lat = build_lattice(2, {32, 32}, {1.0, 1.0});
  const double h = lat.spacing();
  const std::vector<double> radii{4 * h, 6 * h, 0.25};
  EXPECT_TRUE(curvature_decay_probe(FormField(lat, 2), 0, radii).degenerate);
  FormField f(lat, 2);
  for (double& x : f.values()) x = 3.0;
  const auto fit = curvature_decay_probe(f, 0, radii);
  EXPECT_FALSE(fit.degenerate);
  EXPECT_NEAR(fit.exponent, 2.0, 0.2);
}

TEST(Observables, DecompositionIdentityConvergesUnderRefinement) {
  std::vector<Lattice> lats;
  for (int n : {16, 32, 64}) lats.push_back(build_lattice(2, {n, n}, {1.0, 1.0}));
  auto family = [](const Lattice& lat) {
    State s = init_state(make_reference_connection(lat, 0), InitMode::Vacuum, 0.1, 0);
    for (std::size_t v = 0; v < lat.vertex_count(); ++v) {
      const Point p = lat.position(v);
      const double rho = 0.7 + 0.2 * std::sin(2 * std::numbers::pi * p[0]);
      s.u[v] = std::polar(rho, 2 * std::numbers::pi * (p[0] + 0.3 * std::sin(2 * std::numbers::pi * p[1])));
    }
    for (int axis = 0; axis < 2; ++axis)
      for (std::size_t v = 0; v < lat.vertex_count(); ++v)
        s.a[lat.cell(axis, v)] = 0.5 * std::cos(2 * std::numbers::pi * lat.position(v)[1 - axis]);
    return s;
  };
  const auto study = decomposition_refinement(lats, family);
  EXPECT_GT(study.slope, 0.8);
}

TEST(Observables, DecompositionMasksZeros) {
  const Lattice lat = build_lattice(2, {8, 8}, {1.0, 1.0});
  State s(make_reference_connection(lat, 0));
  for (Complex& z : s.u) z = 0.0;
  const auto c = decomposition_check(s);
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.checked_edges, 0u);
}

TEST(Observables, MeasureNormalizations) {
  const Lattice lat = build_lattice(2, {16, 16}, {1.0, 1.0});
  const State s = random_state(make_reference_connection(lat, 1), 2);
  const FormField a = measure_field(s, 0.1);
  const FormField b = measure_field(s, 0.1, MeasureNormalization::PiLogEps);
  for (std::size_t v = 0; v < a.size(); ++v) EXPECT_NEAR(a[v], std::numbers::pi * b[v], 1e-12 * a[v]);
  EXPECT_THROW(measure_field(s, 1.0), ParameterError);
  EXPECT_THROW(measure_field(s, 2.0), ParameterError);
}
