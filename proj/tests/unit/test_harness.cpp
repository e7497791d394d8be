#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "glb/harness/config.hpp"
#include "glb/harness/run.hpp"

using namespace glb;
using namespace glb::harness;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(study = minimize
n = 2
N = 16
L = 1.0
d = 0
epsilon = 0.1
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("glb_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, MinimalConfigGetsDefaults) {
  const ExperimentConfig cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.study, Study::Minimize);
  EXPECT_EQ(cfg.sizes, (std::vector<int>{16, 16}));
  EXPECT_EQ(cfg.lengths, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(cfg.solver.method, Method::GradientFlow);
  EXPECT_EQ(cfg.solver.tolerance, 1e-8);
  EXPECT_EQ(cfg.init_mode(), InitMode::Random);
  EXPECT_EQ(cfg.seed, 0u);
  EXPECT_EQ(cfg.eta0, 0.1);
  EXPECT_EQ(cfg.threshold, 0.5);
  EXPECT_EQ(cfg.echo().at("output"), "out");
}

TEST(Config, CommentsAndWhitespaceAreIgnored) {
  const ExperimentConfig cfg = parse_config(std::string("# header\n\n") + kMinimal + "seed = 42   # trailing\n");
  EXPECT_EQ(cfg.seed, 42u);
}

TEST(Config, NegativeEpsilonNamesKeyAndLine) {
  std::string text = kMinimal;
  text.replace(text.find("epsilon = 0.1"), 13, "epsilon = -0.1");
  try {
    parse_config(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.key(), "epsilon");
    EXPECT_EQ(e.line(), 6);
    EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
  }
}

TEST(Config, DuplicateKeyNamesBothLines) {
  try {
    parse_config(std::string(kMinimal) + "d = 1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_EQ(e.key(), "d");
    EXPECT_NE(msg.find("line 5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 7"), std::string::npos) << msg;
  }
}

TEST(Config, UnknownKeyTypeMismatchAndRanges) {
  EXPECT_THROW(parse_config(std::string(kMinimal) + "colour = blue\n"), ParseError);
  EXPECT_THROW(parse_config(std::string(kMinimal) + "tolerance = small\n"), ParseError);
  EXPECT_THROW(parse_config(std::string(kMinimal) + "max_iterations = 0\n"), ParseError);
  EXPECT_THROW(parse_config(std::string(kMinimal) + "threshold = 1.5\n"), ParseError);
  EXPECT_THROW(parse_config(std::string(kMinimal) + "init = vortex-ansatz\n"), ParseError);  // d = 0
  EXPECT_THROW(parse_config(std::string(kMinimal) + "method = newton\n"), ParseError);
  EXPECT_THROW(parse_config(std::string(kMinimal) + "no equals sign\n"), ParseError);
  EXPECT_THROW(parse_config("study = minimize\nn = 4\nN = 8\nL = 1\nd = 0\nepsilon = 0.1\n"), ParseError);
  EXPECT_THROW(parse_config("study = minimize\nn = 2\nN = 8\nL = 1\nd = 0\n"), ParseError);  // no epsilon
  EXPECT_THROW(parse_config("study = sweep\nn = 2\nN = 32\nL = 1\nd = 1\nepsilons = 0.1, 0.2\n"), ParseError);
  EXPECT_THROW(parse_config("study = sweep\nn = 2\nN = 32\nL = 1\nd = 1\nepsilons = 0.1, 0.05\n"), ParseError);
  EXPECT_THROW(parse_config("study = nap\nn = 2\nN = 32\nL = 1\nd = 1\n"), ParseError);
  try {
    parse_config(std::string(kMinimal) + "radii = 0.01\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.key(), "radii");
    EXPECT_EQ(e.line(), 7);
  }
}

TEST(Config, ListsAndCenters) {
  const ExperimentConfig cfg =
      parse_config("study = probe-monotonicity\nn = 3\nN = 16\nL = 1\nd = 1\nepsilon = 0.2\n"
                   "radii = 0.25\ncenters = 8:8:0, 8:8:5\n");
  EXPECT_EQ(cfg.sizes.size(), 3u);
  ASSERT_EQ(cfg.centers.size(), 2u);
  EXPECT_EQ(cfg.centers[1][2], 5);
  EXPECT_THROW(parse_config("study = probe-monotonicity\nn = 3\nN = 16\nL = 1\nd = 1\nepsilon = 0.2\ncenters = 8:8\n"),
               ParseError);
}

TEST(Harness, MinimizeOnVacuumReportsZeroIterations) {
  ExperimentConfig cfg = parse_config(std::string(kMinimal) + "init = vacuum\n");
  cfg.output = scratch("vacuum").string();
  const RunManifest m = run_experiment(cfg);
  EXPECT_TRUE(m.all_pass());
  EXPECT_TRUE(verify_manifest(m));
  const auto summary = nlohmann::json::parse(slurp(fs::path(cfg.output) / "summary.json"));
  EXPECT_EQ(summary["results"]["iterations"], 0);
  EXPECT_EQ(summary["results"]["energy"]["total"], 0.0);
  EXPECT_TRUE(summary["checks"]["converged"].get<bool>());
  EXPECT_TRUE(fs::exists(fs::path(cfg.output) / "manifest.json"));
  EXPECT_TRUE(fs::exists(fs::path(cfg.output) / "final.glb1"));
}

TEST(Harness, RerunGivesIdenticalCsvDigests) {
  ExperimentConfig cfg = parse_config("study = sweep\nn = 2\nN = 32\nL = 1\nd = 1\nepsilons = 0.2, 0.15\n"
                                      "method = nonlinear-cg\ntolerance = 1e-6\n");
  cfg.output = scratch("rerun_a").string();
  const RunManifest a = run_experiment(cfg);
  cfg.output = scratch("rerun_b").string();
  const RunManifest b = run_experiment(cfg);
  ASSERT_NE(a.find("sweep.csv"), nullptr);
  EXPECT_EQ(a.find("sweep.csv")->sha256, b.find("sweep.csv")->sha256);
  const std::string header = slurp(fs::path(cfg.output) / "sweep.csv").substr(0, 200);
  EXPECT_EQ(header.rfind("epsilon,energy_total,energy_kinetic,energy_curvature,energy_potential,lambda_ratio,"
                         "curvature_ratio,max_u,eps_max_du,eps_max_f,vortex_components\n",
                         0),
            0u);
}

TEST(Harness, FailedRunLeavesOnlyManifest) {
  ExperimentConfig cfg = parse_config("study = report\nn = 2\nN = 16\nL = 1\nd = 0\nsnapshot = /nonexistent.glb1\n");
  const fs::path dir = scratch("failed");
  cfg.output = dir.string();
  EXPECT_THROW(run_experiment(cfg), StudyError);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path().filename().string());
  ASSERT_EQ(files.size(), 1u);
  EXPECT_EQ(files[0], "manifest.json");
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_NE(manifest["error"].get<std::string>().find("report"), std::string::npos);
}

TEST(Harness, ReportReadsSnapshotAndProbesRun) {
  // Solve, then re-analyze the snapshot and run the probe studies on it.
  ExperimentConfig solve = parse_config("study = minimize\nn = 2\nN = 32\nL = 1\nd = 1\nepsilon = 0.1\n"
                                        "method = nonlinear-cg\ntolerance = 1e-7\n");
  solve.output = scratch("solve").string();
  ASSERT_TRUE(run_experiment(solve).all_pass());
  const std::string snap = (fs::path(solve.output) / "final.glb1").string();

  ExperimentConfig report = parse_config("study = report\nn = 2\nN = 32\nL = 1\nd = 1\nsnapshot = " + snap + "\n");
  report.output = scratch("report").string();
  EXPECT_TRUE(run_experiment(report).all_pass());

  ExperimentConfig mono = parse_config("study = probe-monotonicity\nn = 2\nN = 32\nL = 1\nd = 1\nepsilon = 0.1\n"
                                       "radii = 0.125, 0.1875, 0.25\nsnapshot = " + snap + "\n");
  mono.output = scratch("mono").string();
  const RunManifest m = run_experiment(mono);
  EXPECT_TRUE(m.checks.at("shell_sums_consistent"));
  EXPECT_NE(m.find("monotonicity.csv"), nullptr);

  ExperimentConfig clear = parse_config("study = probe-clearing\nn = 2\nN = 32\nL = 1\nd = 1\nepsilon = 0.1\n"
                                        "snapshot = " + snap + "\n");
  clear.output = scratch("clear").string();
  const RunManifest c = run_experiment(clear);
  EXPECT_TRUE(c.checks.count("clearing_holds"));
  EXPECT_NE(c.find("clearing.csv"), nullptr);
}

TEST(Harness, AppendixStudyIn2D) {
  ExperimentConfig cfg = parse_config("study = probe-appendix\nn = 2\nN = 32\nL = 1\nd = 1\ngaffney_samples = 6\n");
  cfg.output = scratch("appendix").string();
  const RunManifest m = run_experiment(cfg);
  EXPECT_TRUE(m.checks.at("dd_zero_1e-12"));
  EXPECT_TRUE(m.checks.at("adjoint_1e-12"));
  EXPECT_TRUE(m.checks.at("hodge_1e-10"));
  EXPECT_TRUE(m.checks.at("poisson_mode_1e-11"));
  EXPECT_TRUE(m.checks.at("trace_identity_1e-12"));
  EXPECT_EQ(m.checks.count("green_slope_in_-1.3_-0.7"), 0u);
}

TEST(Harness, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
