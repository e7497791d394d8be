#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "glb/snapshot.hpp"
#include "glb/solver.hpp"
#include "support/fixtures.hpp"

using namespace glb;

namespace {
void expect_descent(const SolveTrace& t) {
  for (std::size_t i = 1; i < t.entries.size(); ++i) {
    const double e0 = t.entries[i - 1].energy;
    EXPECT_LE(t.entries[i].energy, e0 + 1e-13 * std::max(1.0, std::abs(e0))) << "iteration " << i;
  }
}
}  // namespace

TEST(Solver, InitModes) {
  const Lattice lat = build_lattice(2, {16, 16}, {1.0, 1.0});
  const auto trivial = make_reference_connection(lat, 0);
  const State vac = init_state(trivial, InitMode::Vacuum, 0.1, 0);
  for (const Complex& z : vac.u) EXPECT_EQ(z, Complex(1.0, 0.0));
  EXPECT_EQ(energy(vac, 0.1).total, 0.0);
  EXPECT_THROW(init_state(trivial, InitMode::VortexAnsatz, 0.1, 0), ModeError);

  const State r1 = init_state(trivial, InitMode::Random, 0.1, 99);
  const State r2 = init_state(trivial, InitMode::Random, 0.1, 99);
  EXPECT_EQ(r1.u, r2.u);
  for (std::size_t e = 0; e < r1.a.size(); ++e) {
    EXPECT_EQ(r1.a[e], r2.a[e]);
    EXPECT_LE(std::abs(r1.a[e]), 1.0);
  }
  for (const Complex& z : r1.u) EXPECT_LE(std::abs(z), 1.0);
  const State r3 = init_state(trivial, InitMode::Random, 0.1, 100);
  EXPECT_NE(r1.u, r3.u);
}

TEST(Solver, VacuumReturnsImmediately) {
  const Lattice lat = build_lattice(2, {16, 16}, {1.0, 1.0});
  const State vac(make_reference_connection(lat, 0));
  for (Method m : {Method::GradientFlow, Method::NonlinearCG}) {
    SolveOptions opt;
    opt.method = m;
    const auto res = minimize(vac, 0.1, opt);
    EXPECT_TRUE(res.trace.converged);
    EXPECT_EQ(res.trace.iterations, 0u);
    EXPECT_EQ(res.trace.final_energy.total, 0.0);
  }
}

TEST(Solver, OptionsAreValidated) {
  const Lattice lat = build_lattice(2, {8, 8}, {1.0, 1.0});
  const State vac(make_reference_connection(lat, 0));
  SolveOptions bad;
  bad.tolerance = 0.0;
  EXPECT_THROW(minimize(vac, 0.1, bad), ParameterError);
  bad = {};
  bad.max_iterations = 0;
  EXPECT_THROW(minimize(vac, 0.1, bad), ParameterError);
  EXPECT_THROW(minimize(vac, 0.0, {}), ParameterError);
}

TEST(Solver, RandomTrivialBundleRelaxesToVacuum) {
  const Lattice lat = build_lattice(2, {32, 32}, {1.0, 1.0});
  const auto ref = make_reference_connection(lat, 0);
  for (Method m : {Method::GradientFlow, Method::NonlinearCG}) {
    SolveOptions opt;
    opt.method = m;
    opt.tolerance = 1e-8;
    const auto res = minimize(init_state(ref, InitMode::Random, 0.1, 5), 0.1, opt);
    ASSERT_TRUE(res.trace.converged) << to_string(m) << ": " << res.trace.message;
    EXPECT_LT(res.trace.final_energy.total, 1e-6);
    const double mu = detail::max_modulus(res.state);
    EXPECT_GE(mu, 1.0 - 1e-3);
    EXPECT_LE(mu, 1.0 + 1e-3);
    EXPECT_LE(res.trace.residuals->el_u_inf, 10 * opt.tolerance);
    EXPECT_LE(res.trace.residuals->el_a_inf, 10 * opt.tolerance);
    EXPECT_FALSE(res.trace.max_principle_flag);
    expect_descent(res.trace);
  }
}

TEST(Solver, VortexMinimizerKeepsChargeAndCore) {
  const Lattice lat = build_lattice(2, {32, 32}, {1.0, 1.0});
  const auto ref = make_reference_connection(lat, 1);
  SolveOptions opt;
  opt.method = Method::NonlinearCG;
  opt.tolerance = 1e-7;
  const auto res = minimize(init_state(ref, InitMode::VortexAnsatz, 0.1, 0), 0.1, opt);
  ASSERT_TRUE(res.trace.converged) << res.trace.message;
  expect_descent(res.trace);
  const auto rep = vortex_set(res.state, 0.5);
  EXPECT_EQ(rep.components, 1u);
  EXPECT_NEAR(rep.slice_charge[0], std::numbers::pi, 1e-11);
  EXPECT_LE(detail::max_modulus(res.state), 1.0 + 1e-3);
  // London residual norm bounded by the discrete-d norm bound times the A residual.
  const double bound = 10 * opt.tolerance * lat.dim() / lat.spacing();
  EXPECT_LE(res.trace.residuals->london, bound);
}

TEST(Solver, SameSeedSameResult) {
  const Lattice lat = build_lattice(2, {16, 16}, {1.0, 1.0});
  const auto ref = make_reference_connection(lat, 1);
  SolveOptions opt;
  opt.tolerance = 1e-6;
  const auto a = minimize(init_state(ref, InitMode::Random, 0.2, 3), 0.2, opt);
  const auto b = minimize(init_state(ref, InitMode::Random, 0.2, 3), 0.2, opt);
  EXPECT_EQ(a.state.u, b.state.u);
  EXPECT_EQ(a.trace.final_energy.total, b.trace.final_energy.total);
}

TEST(Solver, IterationBudgetIsReportedNotThrown) {
  const Lattice lat = build_lattice(2, {16, 16}, {1.0, 1.0});
  SolveOptions opt;
  opt.max_iterations = 3;
  const auto res = minimize(init_state(make_reference_connection(lat, 0), InitMode::Random, 0.1, 1), 0.1, opt);
  EXPECT_FALSE(res.trace.converged);
  EXPECT_EQ(res.trace.iterations, 3u);
  EXPECT_FALSE(res.trace.message.empty());
}

TEST(Solver, ContinuationValidatesSchedule) {
  const Lattice lat = build_lattice(2, {32, 32}, {1.0, 1.0});
  const auto ref = make_reference_connection(lat, 1);
  EXPECT_THROW(continuation(ref, {0.1, 0.2}), ParameterError);
  EXPECT_THROW(continuation(ref, {0.1, 0.05}), RangeError);  // 2h = 0.0625
  EXPECT_THROW(continuation(ref, {}), ParameterError);
}

TEST(Solver, SmallContinuationProducesMonitors) {
  const Lattice lat = build_lattice(2, {32, 32}, {1.0, 1.0});
  SolveOptions opt;
  opt.method = Method::NonlinearCG;
  opt.tolerance = 1e-6;
  const auto res = continuation(make_reference_connection(lat, 1), {0.2, 0.15, 0.1}, opt);
  ASSERT_EQ(res.entries.size(), 3u);
  for (const auto& e : res.entries) {
    EXPECT_TRUE(e.converged);
    EXPECT_TRUE(e.residual_ok);
    EXPECT_GT(e.lambda_ratio, 0.0);
  }
  EXPECT_GT(res.fit.slope, 0.0);
}

TEST(Solver, LinearFitRecoversLine) {
  const auto fit = linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_NEAR(fit.slope, 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  EXPECT_NEAR(fit.r2, 1.0, 1e-14);
}

TEST(Snapshot, RoundTripIsBitExact) {
  for (int dim : {2, 3}) {
    const Lattice lat = dim == 2 ? build_lattice(2, {8, 12}, {0.5, 0.75}) : build_lattice(3, {4, 6, 8}, {1, 1.5, 2});
    const State s = glb::testing::random_state(make_reference_connection(lat, -2), 77);
    std::stringstream buf;
    write_snapshot(buf, s, 0.07);
    const std::string bytes = buf.str();
    EXPECT_EQ(bytes.substr(0, 4), "GLB1");
    EXPECT_EQ(bytes.size(), 4 + 8 * (1 + 2 * dim + 2 + 2 * lat.vertex_count() + lat.cell_count(1)));
    const Snapshot back = read_snapshot(buf);
    EXPECT_EQ(back.epsilon, 0.07);
    EXPECT_EQ(back.state.degree(), -2);
    EXPECT_TRUE(back.state.lattice() == lat);
    EXPECT_EQ(back.state.u, s.u);
    for (std::size_t e = 0; e < s.a.size(); ++e) EXPECT_EQ(back.state.a[e], s.a[e]);
    std::stringstream again;
    write_snapshot(again, back.state, back.epsilon);
    EXPECT_EQ(again.str(), bytes);
  }
}

TEST(Snapshot, HeaderIsLittleEndian) {
  const Lattice lat = build_lattice(2, {4, 4}, {1.0, 1.0});
  std::stringstream buf;
  write_snapshot(buf, State(make_reference_connection(lat, 1)), 0.5);
  const std::string b = buf.str();
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 2u);  // n
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(static_cast<unsigned char>(b[12]), 4u);  // N_0
}

TEST(Snapshot, RejectsCorruptInput) {
  std::stringstream bad("XXXX");
  EXPECT_THROW(read_snapshot(bad), SnapshotError);
  const Lattice lat = build_lattice(2, {4, 4}, {1.0, 1.0});
  std::stringstream buf;
  write_snapshot(buf, State(make_reference_connection(lat, 1)), 0.5);
  std::stringstream cut(buf.str().substr(0, buf.str().size() - 3));
  EXPECT_THROW(read_snapshot(cut), SnapshotError);
}
