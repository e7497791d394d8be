#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "glb/harness/config.hpp"
#include "glb/harness/run.hpp"

namespace {

const char* kStudies = "minimize, sweep, probe-monotonicity, probe-clearing, probe-appendix, report";

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw glb::Error("cannot open config " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete magnetic Ginzburg-Landau experiments on periodic lattices"};
  std::string study, config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("study", study, std::string("study to run: ") + kStudies)->required();
  app.add_option("--config", config_path, "key = value config file")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides 'output')");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides 'seed')");
  CLI11_PARSE(app, argc, argv);

  if (!glb::harness::study_from_string(study)) {
    std::cerr << "glb: unknown study '" << study << "' (expected one of " << kStudies << ")\n";
    return 2;
  }
  glb::harness::ExperimentConfig cfg;
  try {
    std::string text = read_file(config_path);
    // The study may be given on the command line only.
    bool has_study = false;
    {
      std::istringstream is(text);
      std::string line;
      while (std::getline(is, line)) {
        const auto body = glb::harness::detail::trim(line.substr(0, line.find('#')));
        if (body.rfind("study", 0) == 0 && glb::harness::detail::trim(body.substr(0, body.find('='))) == "study")
          has_study = true;
      }
    }
    if (!has_study) text += "\nstudy = " + study + "\n";
    cfg = glb::harness::parse_config(text);
    if (glb::harness::to_string(cfg.study) != study) {
      std::cerr << "glb: config declares study '" << glb::harness::to_string(cfg.study) << "' but '" << study
                << "' was requested\n";
      return 2;
    }
    if (*out_opt) cfg.output = out_dir;
    if (*seed_opt) {
      cfg.seed = seed;
      cfg.solver.seed = seed;
    }
  } catch (const glb::Error& e) {
    std::cerr << "glb: " << config_path << ": " << e.what() << "\n";
    return 2;
  }

  try {
    const auto manifest = glb::harness::run_experiment(cfg);
    for (const auto& [name, ok] : manifest.checks) std::printf("%s %s\n", ok ? "PASS" : "FAIL", name.c_str());
    std::printf("artifacts written to %s\n", cfg.output.c_str());
    return manifest.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "glb: " << e.what() << "\n";
    return 2;
  }
}
