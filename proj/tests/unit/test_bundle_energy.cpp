#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "glb/current.hpp"
#include "glb/energy.hpp"
#include "glb/observables.hpp"
#include "support/fixtures.hpp"

using namespace glb;
using glb::testing::random_angles;
using glb::testing::random_state;
using glb::testing::relative_gap;

namespace {

// Finite-difference oracle: central differences of the total energy with
// respect to each real degree of freedom, divided by h^n to match the
// L2-metric gradient.
void check_gradient_by_differences(const State& s, double eps) {
  const double step = 1e-5;
  const double w = s.lattice().cell_weight();
  const FieldGradient g = gradient(s, eps);
  const double scale = std::max(1.0, g.max_abs());
  auto probe = [&](auto mutate) {
    State plus = s, minus = s;
    mutate(plus, step);
    mutate(minus, -step);
    return (energy(plus, eps).total - energy(minus, eps).total) / (2.0 * step * w);
  };
  for (std::size_t v = 0; v < s.u.size(); ++v) {
    const double re = probe([&](State& t, double d) { t.u[v] += Complex(d, 0.0); });
    const double im = probe([&](State& t, double d) { t.u[v] += Complex(0.0, d); });
    EXPECT_NEAR(re, g.u[v].real(), 1e-6 * scale) << "u re at " << v;
    EXPECT_NEAR(im, g.u[v].imag(), 1e-6 * scale) << "u im at " << v;
  }
  for (std::size_t e = 0; e < s.a.size(); ++e) {
    const double fd = probe([&](State& t, double d) { t.a[e] += d; });
    EXPECT_NEAR(fd, g.a[e], 1e-6 * scale) << "A at " << e;
  }
}

}  // namespace

TEST(Bundle, ReferenceCurvatureIsUniformAndQuantized) {
  for (int d = -3; d <= 3; ++d) {
    const Lattice lat = build_lattice(2, {12, 12}, {1.0, 1.0});
    const auto ref = make_reference_connection(lat, d);
    const FormField& f0 = ref->curvature();
    const double total = deterministic_sum(f0.values()) * lat.cell_weight();
    EXPECT_NEAR(total, 2.0 * std::numbers::pi * d, 1e-12);
    for (double x : f0.values()) EXPECT_DOUBLE_EQ(x, f0[0]);
  }
}

TEST(Bundle, ThreeDimensionalReferenceIsFlatOutsideXY) {
  const Lattice lat = build_lattice(3, {6, 6, 6}, {1.0, 1.0, 1.0});
  const auto ref = make_reference_connection(lat, 2);
  const FormField& f0 = ref->curvature();
  const std::size_t nv = lat.vertex_count();
  for (std::size_t p = nv; p < f0.size(); ++p) EXPECT_EQ(f0[p], 0.0);
}

TEST(Bundle, VacuumHasZeroEnergyOnTrivialBundle) {
  const Lattice lat = build_lattice(2, {8, 8}, {1.0, 1.0});
  const State s(make_reference_connection(lat, 0));
  const auto e = energy(s, 0.1);
  EXPECT_EQ(e.total, 0.0);
}

TEST(Bundle, StateValidatesSizes) {
  const Lattice lat = build_lattice(2, {8, 8}, {1.0, 1.0});
  const Lattice other = build_lattice(2, {6, 6}, {1.0, 1.0});
  const auto ref = make_reference_connection(lat, 1);
  EXPECT_THROW(State(ref, std::vector<Complex>(3), FormField(lat, 1)), ConfigurationError);
  EXPECT_THROW(State(ref, std::vector<Complex>(64), FormField(other, 1)), ConfigurationError);
  EXPECT_THROW(State(ref, std::vector<Complex>(64), FormField(lat, 2)), ConfigurationError);
}

TEST(Bundle, GaugeInvarianceOfLocalObservables) {
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = trial % 2 ? 3 : 2;
    const Lattice lat = dim == 2 ? build_lattice(2, {10, 10}, {1.0, 1.0}) : build_lattice(3, {6, 6, 6}, {1.0, 1.0, 1.0});
    const State s = random_state(make_reference_connection(lat, trial % 7 - 3), 100 + trial);
    const State g = gauge_transform(s, random_angles(lat, 200 + trial));
    const double eps = 0.2;
    const auto compare = [](std::span<const double> a, std::span<const double> b) {
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_LE(std::abs(a[i] - b[i]), 1e-12 * std::max(1.0, std::abs(a[i])));
    };
    compare(energy_density(s, eps).values(), energy_density(g, eps).values());
    compare(curvature(s).values(), curvature(g).values());
    compare(prejacobian(s).values(), prejacobian(g).values());
    compare(jacobian(s).J.values(), jacobian(g).J.values());
    const auto d1 = covariant_derivative(s), d2 = covariant_derivative(g);
    for (std::size_t e = 0; e < d1.size(); ++e)
      EXPECT_LE(std::abs(std::abs(d1[e]) - std::abs(d2[e])), 1e-12 * std::max(1.0, std::abs(d1[e])));
    EXPECT_LE(relative_gap(energy(s, eps).total, energy(g, eps).total), 1e-12);
  }
}

TEST(Bundle, CoulombFixRemovesExactPart) {
  const Lattice lat = build_lattice(2, {12, 12}, {1.0, 1.0});
  const State s = random_state(make_reference_connection(lat, 1), 7);
  const auto fixed = coulomb_fix(s);
  EXPECT_LT(fixed.report.codiff_max, 1e-8);
  EXPECT_LE(relative_gap(energy(s, 0.2).total, energy(fixed.state, 0.2).total), 1e-12);
}

TEST(Bundle, SliceChargeIsQuantizedOnRandomStates) {
  for (int d = -3; d <= 3; ++d) {
    const Lattice lat2 = build_lattice(2, {16, 16}, {1.0, 1.0});
    const State s2 = random_state(make_reference_connection(lat2, d), 31 + d);
    for (double q : slice_charges(jacobian(s2).J)) EXPECT_NEAR(q, std::numbers::pi * d, 1e-11);
    const Lattice lat3 = build_lattice(3, {8, 8, 8}, {1.0, 1.0, 1.0});
    const State s3 = random_state(make_reference_connection(lat3, d), 41 + d);
    for (double q : slice_charges(jacobian(s3).J)) EXPECT_NEAR(q, std::numbers::pi * d, 1e-11);
  }
}

TEST(Energy, BreakdownSumsAndDensityIntegrates) {
  const Lattice lat = build_lattice(2, {10, 10}, {1.0, 1.0});
  const State s = random_state(make_reference_connection(lat, 2), 3);
  const auto e = energy(s, 0.15);
  EXPECT_DOUBLE_EQ(e.total, e.kinetic + e.curvature + e.potential);
  const FormField dens = energy_density(s, 0.15);
  EXPECT_LE(relative_gap(deterministic_sum(dens.values()) * lat.cell_weight(), e.total), 1e-12);
}

TEST(Energy, RejectsNonpositiveEpsilon) {
  const Lattice lat = build_lattice(2, {8, 8}, {1.0, 1.0});
  const State s(make_reference_connection(lat, 0));
  EXPECT_THROW(energy(s, 0.0), ParameterError);
  EXPECT_THROW(energy(s, -0.1), ParameterError);
  EXPECT_THROW(stress_tensor(s, 1.0), ParameterError);
}

TEST(Energy, GradientMatchesFiniteDifferencesIn2D) {
  const Lattice lat = build_lattice(2, {8, 8}, {1.0, 1.0});
  check_gradient_by_differences(random_state(make_reference_connection(lat, 1), 11), 0.3);
}

TEST(Energy, GradientMatchesFiniteDifferencesIn3D) {
  const Lattice lat = build_lattice(3, {8, 8, 8}, {1.0, 1.0, 1.0});
  check_gradient_by_differences(random_state(make_reference_connection(lat, -1), 12), 0.3);
}

TEST(Energy, LondonFormIsExteriorDerivativeOfGaugeResidual) {
  const Lattice lat = build_lattice(3, {6, 6, 6}, {1.0, 1.0, 1.0});
  const State s = random_state(make_reference_connection(lat, 2), 5);
  const Residuals r = residuals(s, 0.2);
  const FormField d_el = exterior_d(r.el_a);
  for (std::size_t p = 0; p < d_el.size(); ++p) EXPECT_EQ(r.london_form[p], d_el[p]);
  const FormField direct = london_form_direct(s);
  const double scale = max_abs(direct) + max_abs(r.london_form);
  for (std::size_t p = 0; p < direct.size(); ++p) EXPECT_NEAR(direct[p], r.london_form[p], 1e-10 * scale);
}

TEST(Energy, TraceIdentityHoldsCellwise) {
  for (int dim : {2, 3}) {
    const Lattice lat = dim == 2 ? build_lattice(2, {10, 10}, {1.0, 1.0}) : build_lattice(3, {6, 6, 6}, {1.0, 1.0, 1.0});
    const State s = random_state(make_reference_connection(lat, 1), 60 + dim);
    const double eps = 0.2;
    const StressField t = stress_tensor(s, eps);
    const FormField dens = energy_density(s, eps);
    for (std::size_t v = 0; v < lat.vertex_count(); ++v) {
      const double lhs = t.log_eps * t.trace(v) - (dim - 2) * t.density[v];
      const double rhs = t.potential_twice[v] - t.curvature_sq[v];
      EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, t.density[v]));
      EXPECT_LE(std::abs(t.density[v] - dens[v]), 1e-12 * std::max(1.0, dens[v]));
    }
  }
}

TEST(Energy, VacuumIsCriticalWithZeroResiduals) {
  const Lattice lat = build_lattice(2, {8, 8}, {1.0, 1.0});
  const State s(make_reference_connection(lat, 0));
  const Residuals r = residuals(s, 0.1);
  EXPECT_EQ(r.el_u_inf, 0.0);
  EXPECT_EQ(r.el_a_inf, 0.0);
  EXPECT_EQ(r.london, 0.0);
}

TEST(Energy, PrejacobianIsBoundedByModulusTimesDerivative) {
  const Lattice lat = build_lattice(2, {10, 10}, {1.0, 1.0});
  const State s = random_state(make_reference_connection(lat, 1), 9);
  const FormField j = prejacobian(s);
  const auto du = covariant_derivative(s);
  for (int axis = 0; axis < 2; ++axis)
    for (std::size_t v = 0; v < lat.vertex_count(); ++v) {
      const std::size_t e = lat.cell(axis, v);
      EXPECT_LE(std::abs(j[e]), std::abs(s.u[v]) * std::abs(du[e]) * (1 + 1e-12) + 1e-14);
    }
}
