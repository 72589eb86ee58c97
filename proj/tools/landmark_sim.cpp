// Synthetic world and sensor generator. Writes replay directories that the
// pipeline can consume with --replay.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "landmarks/errors.hpp"
#include "landmarks/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic landmark scenario generator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::uint64_t seed = 1;

  auto* exp = app.add_subcommand("export", "Render a scenario into a replay directory");
  exp->add_option("--scenario", scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", out_dir, "Output directory")->required();

  std::string bench_out;
  auto* bench = app.add_subcommand("benchmark-scenario", "Write the standard benchmark scenario JSON");
  bench->add_option("--seed", seed, "World seed");
  bench->add_option("--out", bench_out, "Output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*exp) {
      const auto s = landmarks::load_scenario(scenario_path);
      landmarks::export_replay(s, out_dir);
      std::cout << "wrote " << s.n_frames << " frames to " << out_dir << "\n";
    } else if (*bench) {
      const auto j = landmarks::scenario_to_json(landmarks::benchmark_scenario(seed)).dump(2);
      if (bench_out.empty()) {
        std::cout << j << "\n";
      } else {
        std::ofstream(bench_out) << j << "\n";
      }
    }
    return 0;
  } catch (const landmarks::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const landmarks::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
