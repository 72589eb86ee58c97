#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "landmarks/errors.hpp"
#include "landmarks/pipeline.hpp"

using namespace landmarks;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("landmarks_pipeline_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scenario short_benchmark(int frames) {
  Scenario s = benchmark_scenario(2);
  s.n_frames = frames;
  return s;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LANDMARKS_PIPELINE_PATH) + " -q " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Pipeline, EmptyWorldGivesNoTracks) {
  Scenario s = short_benchmark(5);
  s.world.landmarks.clear();
  PipelineConfig cfg;
  const auto summary = run_pipeline(cfg, &s);
  EXPECT_EQ(summary.frames, 5u);
  EXPECT_TRUE(summary.has_ground_truth);
  EXPECT_EQ(summary.false_positives, 0u);
  for (auto c : {LandmarkClass::kTree, LandmarkClass::kBush}) {
    EXPECT_FALSE(summary.metrics.of(c).recall.has_value());
    EXPECT_FALSE(summary.metrics.of(c).precision.has_value());
  }

  Pipeline p(cfg, s.sensor.camera, s.sensor.mount_height);
  const auto poses = scenario_poses(s);
  for (int f = 1; f <= 5; ++f) EXPECT_TRUE(p.process(simulate_frame(s, poses, f), s.dt).tracks.empty());
}

TEST(Pipeline, StageTimesWithinTotal) {
  const Scenario s = short_benchmark(5);
  Pipeline p(PipelineConfig{}, s.sensor.camera, s.sensor.mount_height);
  const auto poses = scenario_poses(s);
  for (int f = 1; f <= 5; ++f) {
    const auto r = p.process(simulate_frame(s, poses, f), s.dt);
    const auto& t = r.times;
    EXPECT_LE(t.clustering_ms + t.proposal_ms + t.tracking_ms + t.classification_ms, 1.05 * t.total_ms);
    EXPECT_EQ(r.frame, f);
    EXPECT_EQ(r.association.component_of.size(), r.instances.size());
  }
}

TEST(Pipeline, ReportsLandmarksOnShortRun) {
  const Scenario s = short_benchmark(20);
  const auto summary = run_pipeline(PipelineConfig{}, &s);
  EXPECT_GT(summary.metrics.of(LandmarkClass::kTree).tp, 0u);
  EXPECT_GT(summary.metrics.of(LandmarkClass::kBush).tp, 0u);
  EXPECT_EQ(summary.metrics.runtime_ms.count("total"), 1u);
}

TEST(Pipeline, CliRunsAreByteIdentical) {
  const fs::path dir = scratch("determinism");
  {
    std::ofstream out(dir / "scenario.json");
    out << scenario_to_json(short_benchmark(12)).dump(2);
  }
  const std::string base = "--scenario " + (dir / "scenario.json").string();
  ASSERT_EQ(run_cli(base + " --tracks-out " + (dir / "a.jsonl").string()), 0);
  ASSERT_EQ(run_cli(base + " --tracks-out " + (dir / "b.jsonl").string()), 0);
  const auto a = slurp(dir / "a.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b.jsonl"));
  std::istringstream lines(a);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) EXPECT_EQ(nlohmann::json::parse(line).at("frame"), ++n);
  EXPECT_EQ(n, 12);
}

TEST(Pipeline, InProcessRunsAreIdentical) {
  const Scenario s = short_benchmark(10);
  const fs::path dir = scratch("inprocess");
  PipelineConfig cfg;
  cfg.tracks_out = dir / "a.jsonl";
  run_pipeline(cfg, &s);
  cfg.tracks_out = dir / "b.jsonl";
  run_pipeline(cfg, &s);
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
}

TEST(Pipeline, ExportsLabeledComponents) {
  const Scenario s = short_benchmark(20);
  const fs::path dir = scratch("export");
  for (const std::size_t n_p : {std::size_t{512}, std::size_t{1024}}) {
    PipelineConfig cfg;
    cfg.n_p = n_p;
    cfg.export_dir = dir;
    const auto summary = run_pipeline(cfg, &s);
    EXPECT_GE(summary.exported_records, 10);
    std::ifstream in(dir / "components.jsonl");
    std::string line;
    int records = 0;
    std::set<std::string> labels;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      labels.insert(j.at("true_class").get<std::string>());
      ASSERT_EQ(j.at("points").size(), n_p);
      ASSERT_EQ(j.at("points")[0].size(), 4u);
      ASSERT_EQ(j.at("prior").size(), kNumSlots);
      ++records;
    }
    EXPECT_EQ(records, summary.exported_records);
    for (const auto& l : labels) EXPECT_TRUE(l == "tree" || l == "bush") << l;
  }
}

TEST(Pipeline, ReplayMatchesDirectoryLayout) {
  const Scenario s = short_benchmark(6);
  const fs::path dir = scratch("replay");
  export_replay(s, dir);
  PipelineConfig cfg;
  cfg.replay_dir = dir;
  const auto summary = run_pipeline(cfg);
  EXPECT_EQ(summary.frames, 6u);
  EXPECT_TRUE(summary.has_ground_truth);

  cfg.export_dir = dir / "export";
  EXPECT_THROW(run_pipeline(cfg), ConfigError);
}

TEST(PipelineConfig, JsonOverridesAndWarnings) {
  const auto cfg = pipeline_config_from_json(nlohmann::json::parse(
      R"({"tau": 0.4, "n_p": 700, "gdpf": {"alpha": 0.2}, "clustering": {"radius": 0.5}, "metrics_out": "m.json"})"));
  EXPECT_DOUBLE_EQ(cfg.tau, 0.4);
  EXPECT_EQ(cfg.n_p, 700u);
  EXPECT_DOUBLE_EQ(cfg.gdpf.alpha, 0.2);
  EXPECT_DOUBLE_EQ(cfg.clustering.radius, 0.5);
  EXPECT_EQ(cfg.metrics_out->string(), "m.json");
  EXPECT_EQ(cfg.validate().size(), 1u);
  EXPECT_TRUE(PipelineConfig{}.validate().empty());

  PipelineConfig bad;
  bad.tau = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(pipeline_config_from_json(nlohmann::json::parse(R"({"tau": "high"})")), ConfigError);
  EXPECT_THROW(run_pipeline(PipelineConfig{}), ConfigError);
}

TEST(PipelineCli, ExitCodes) {
  const fs::path dir = scratch("cli");
  {
    std::ofstream out(dir / "bad_config.json");
    out << R"({"tau": 2.0})";
    std::ofstream sc(dir / "scenario.json");
    sc << scenario_to_json(short_benchmark(2)).dump();
  }
  EXPECT_EQ(run_cli("--config " + (dir / "bad_config.json").string() + " --scenario " + (dir / "scenario.json").string()), 2);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("--scenario " + (dir / "scenario.json").string() + " --metrics-out " +
                    (dir / "missing" / "sub" / "m.json").string()),
            3);
  EXPECT_EQ(run_cli("--scenario " + (dir / "scenario.json").string() + " --metrics-out " + (dir / "m.json").string()), 0);
  const auto m = nlohmann::json::parse(slurp(dir / "m.json"));
  EXPECT_TRUE(m.contains("per_class"));
  EXPECT_TRUE(m.contains("runtime_ms"));
}

TEST(PipelineCli, DegradedExternalClassifierStillSucceeds) {
  Scenario s = short_benchmark(4);
  PipelineConfig cfg;
  cfg.classifier = ClassifierKind::kExternal;
  cfg.external_cmd = "/bin/false";
  const auto summary = run_pipeline(cfg, &s);
  EXPECT_GT(summary.warnings, 0);
  EXPECT_FALSE(summary.metrics.notes.empty());

  cfg.external_cmd = std::string(LANDMARKS_STUB_PATH) + " echo";
  EXPECT_EQ(run_pipeline(cfg, &s).warnings, 0);
}
