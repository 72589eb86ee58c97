// Semantic landmark detection pipeline: segmentation, 2D/3D proposal fusion,
// GDPF tracking and point cloud classification over a simulated scenario or
// a recorded replay directory.

#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "landmarks/errors.hpp"
#include "landmarks/pipeline.hpp"

namespace {

void print_summary(const landmarks::RunSummary& s) {
  using landmarks::LandmarkClass;
  std::cout << "frames: " << s.frames << "\n";
  for (auto c : {LandmarkClass::kTree, LandmarkClass::kBush}) {
    const auto& m = s.metrics.of(c);
    auto fmt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("null"); };
    std::cout << landmarks::class_name(c) << ": recall=" << fmt(m.recall) << " precision=" << fmt(m.precision)
              << " rmse_xy=" << fmt(m.rmse_xy) << " mean_overlap=" << fmt(m.mean_overlap) << " tp=" << m.tp
              << " fp=" << m.fp << " fn=" << m.fn << "\n";
  }
  for (const auto& [stage, t] : s.metrics.runtime_ms) {
    std::cout << "runtime " << stage << ": mean=" << t.mean_ms << " ms p95=" << t.p95_ms << " ms\n";
  }
  if (s.exported_records > 0) std::cout << "exported records: " << s.exported_records << "\n";
  if (s.warnings > 0) std::cout << "warnings: " << s.warnings << " (external classifier degraded)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic landmark detection pipeline"};

  std::string config_path;
  std::string scenario_path;
  std::string replay_dir;
  std::optional<double> tau;
  std::optional<std::size_t> n_p;
  std::optional<std::uint64_t> seed;
  std::string classifier;
  std::string external_cmd;
  std::string metrics_out;
  std::string tracks_out;
  std::string export_dir;
  bool quiet = false;

  app.add_option("--config", config_path, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--scenario", scenario_path, "Scenario JSON to simulate")->check(CLI::ExistingFile);
  app.add_option("--replay", replay_dir, "Replay directory (frame_NNNNNN.bin + detections)")->check(CLI::ExistingDirectory);
  app.add_option("--tau", tau, "IoU threshold for class proposals")->check(CLI::Range(0.0, 1.0));
  app.add_option("--np", n_p, "Points sampled per component for classification");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--classifier", classifier, "geom | external")->check(CLI::IsMember({"geom", "external"}));
  app.add_option("--external-cmd", external_cmd, "Command line of the external classifier process");
  app.add_option("--metrics-out", metrics_out, "Metrics JSON output path");
  app.add_option("--tracks-out", tracks_out, "Track dump (JSON lines) output path");
  app.add_option("--export-components", export_dir, "Directory for labeled component clouds");
  app.add_flag("-q,--quiet", quiet, "Do not print the summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    landmarks::PipelineConfig cfg;
    if (!config_path.empty()) cfg = landmarks::load_pipeline_config(config_path);
    if (!scenario_path.empty()) {
      cfg.scenario_path = scenario_path;
      cfg.replay_dir.reset();
    }
    if (!replay_dir.empty()) {
      cfg.replay_dir = replay_dir;
      cfg.scenario_path.reset();
    }
    if (tau) cfg.tau = *tau;
    if (n_p) cfg.n_p = *n_p;
    if (seed) cfg.seed = *seed;
    if (!classifier.empty()) cfg.classifier = landmarks::classifier_kind_from_string(classifier);
    if (!external_cmd.empty()) cfg.external_cmd = external_cmd;
    if (!metrics_out.empty()) cfg.metrics_out = metrics_out;
    if (!tracks_out.empty()) cfg.tracks_out = tracks_out;
    if (!export_dir.empty()) cfg.export_dir = export_dir;

    const auto summary = landmarks::run_pipeline(cfg);
    for (const auto& m : summary.messages) std::cerr << m << "\n";
    if (!quiet) print_summary(summary);
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
