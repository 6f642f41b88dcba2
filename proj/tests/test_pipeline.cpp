#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include "hairforge/errors.hpp"
#include "hairforge/metrics.hpp"
#include "hairforge/pipeline.hpp"
#include "hairforge/png_io.hpp"
#include "test_support.hpp"

namespace hairforge {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = slurp(e.path());
  return files;
}

PipelineConfig simulate_config(const testing::Dataset& d, const fs::path& out, std::uint64_t seed) {
  PipelineConfig c;
  c.destination_dir = d.destinations;
  c.exemplar_dir = d.exemplars;
  c.output_dir = out;
  c.seed = seed;
  return c;
}

struct CliResult {
  int exit_code;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(HAIRFORGE_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

TEST(SimulateTest, SingleRecordIsByteIdenticalAcrossRuns) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 1, 1, {48, 48}, 1);
  const auto a = cmd_simulate(simulate_config(data, dir / "a", 42));
  const auto b = cmd_simulate(simulate_config(data, dir / "b", 42));
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_EQ(a.records[0].status, "ok") << a.records[0].message;
  EXPECT_EQ(a.records[0].output_image, "d000_0.png");
  EXPECT_EQ(a.records[0].output_mask, "d000_0.mask.png");
  EXPECT_EQ(a.records[0].mode, "two_step");
  EXPECT_EQ(tree(dir / "a"), tree(dir / "b"));
  EXPECT_EQ(*a.records[0].bleed_delta, 0.0);
}

TEST(SimulateTest, RecordsFollowDestinationAndIndexOrder) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 5, 2, {32, 32}, 2);
  PipelineConfig c = simulate_config(data, dir / "out", 3);
  c.per_image_count = 2;
  c.threads = 3;
  const auto m = cmd_simulate(c);
  ASSERT_EQ(m.records.size(), 10u);
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    EXPECT_EQ(m.records[i].index, static_cast<int>(i % 2));
    EXPECT_EQ(m.records[i].seed, derive_seed(3, m.records[i].destination_id, m.records[i].index));
  }
  EXPECT_EQ(m.records[9].destination_id, "d004");
  const auto lines = SimulationManifest::read_jsonl(dir / "out" / std::string(kManifestName));
  ASSERT_EQ(lines.size(), 10u);
  EXPECT_EQ(lines[3], m.records[3].to_json());

  c.threads = 1;
  c.output_dir = dir / "serial";
  cmd_simulate(c);
  EXPECT_EQ(tree(dir / "out"), tree(dir / "serial"));
}

TEST(SimulateTest, PerImageCountScalesRecordCount) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 72, 2, {16, 16}, 4);
  PipelineConfig c = simulate_config(data, dir / "out", 5);
  c.per_image_count = 2;
  c.mode = BlendMode::naive;
  c.placement.max_offset_fraction = 0.1;
  EXPECT_EQ(cmd_simulate(c).records.size(), 144u);
}

TEST(SimulateTest, NaiveAndGuidedShareMasks) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 10, 3, {40, 40}, 6);
  PipelineConfig c = simulate_config(data, dir / "naive", 7);
  c.mode = BlendMode::naive;
  const auto naive = cmd_simulate(c);
  c.mode = BlendMode::guided;
  c.output_dir = dir / "guided";
  const auto guided = cmd_simulate(c);
  int guided_wins = 0, compared = 0;
  for (std::size_t i = 0; i < naive.records.size(); ++i) {
    const auto& n = naive.records[i];
    const auto& g = guided.records[i];
    ASSERT_EQ(n.status, g.status);
    if (n.status != "ok") continue;
    EXPECT_EQ(n.placement, g.placement);
    EXPECT_EQ(slurp(dir / "naive" / n.output_mask), slurp(dir / "guided" / g.output_mask));
    EXPECT_NE(slurp(dir / "naive" / n.output_image), slurp(dir / "guided" / g.output_image));
    ++compared;
    guided_wins += *g.seam_energy <= *n.seam_energy ? 1 : 0;
  }
  ASSERT_GT(compared, 0);
  EXPECT_GE(guided_wins, compared * 95 / 100);
}

TEST(SimulateTest, InfeasiblePlacementIsRecordedNotFatal) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 2, 1, {32, 32}, 8);
  // Exemplar mask covering the whole frame can never fit.
  save_mask(BinaryMask(32, 32, true), data.exemplars / "e000.mask.png");
  PipelineConfig c = simulate_config(data, dir / "out", 1);
  c.max_attempts = 5;
  const auto m = cmd_simulate(c);
  ASSERT_EQ(m.records.size(), 2u);
  for (const auto& r : m.records) {
    EXPECT_EQ(r.status, "no_feasible_placement");
    EXPECT_TRUE(r.output_image.empty());
    EXPECT_FALSE(r.seam_energy.has_value());
  }
  EXPECT_FALSE(fs::exists(dir / "out" / "d000_0.png"));
}

TEST(SimulateTest, NonConvergenceIsRecorded) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 1, 1, {32, 32}, 9);
  PipelineConfig c = simulate_config(data, dir / "out", 1);
  c.mode = BlendMode::guided;
  c.solver.max_iterations = 1;
  const auto m = cmd_simulate(c);
  EXPECT_EQ(m.records[0].status, "did_not_converge");
  EXPECT_GT(m.records[0].final_residual, c.solver.tolerance);
}

TEST(SimulateTest, HairfreeListSelectsDestinations) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 4, 1, {32, 32}, 10);
  std::ofstream(dir / "list.txt") << "# chosen\nd003\n\nd001\n";
  PipelineConfig c = simulate_config(data, dir / "out", 1);
  c.hairfree_list = dir / "list.txt";
  EXPECT_EQ(list_destinations(c), (std::vector<std::string>{"d001", "d003"}));
  std::ofstream(dir / "bad.txt") << "d009\n";
  c.hairfree_list = dir / "bad.txt";
  EXPECT_THROW(list_destinations(c), ConfigError);
}

TEST(SynthTest, BatchUsesSyntheticMode) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 10, 0, {32, 32}, 11);
  PipelineConfig c = simulate_config(data, dir / "out", 12);
  c.synth = SynthConfig{};
  c.synth->stroke_count = 4;
  const auto m = cmd_synth(c);
  ASSERT_EQ(m.records.size(), 10u);
  for (const auto& r : m.records) {
    EXPECT_EQ(r.status, "ok") << r.message;
    EXPECT_EQ(r.mode, "synthetic-baseline");
    EXPECT_EQ(r.exemplar_id, "synthetic");
    EXPECT_FALSE(r.placement.has_value());
    EXPECT_TRUE(fs::exists(dir / "out" / r.output_image));
  }
}

TEST(SynthTest, HardStrokesUseDictionaryColours) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 1, 0, {40, 40}, 13);
  PipelineConfig c = simulate_config(data, dir / "out", 14);
  c.synth = SynthConfig{};
  c.synth->blur_sigma = 0.0;
  const auto m = cmd_synth(c);
  const RasterImage img = load_image(dir / "out" / m.records[0].output_image);
  const BinaryMask mask = load_mask(dir / "out" / m.records[0].output_mask);
  ASSERT_FALSE(mask.empty());
  const RasterImage dict_levels = [] {
    RasterImage q(5, 1, 3);
    const auto d = ColourDictionary::standard();
    for (int i = 0; i < 5; ++i) {
      for (int ch = 0; ch < 3; ++ch) q.set(i, 0, ch, d.entries[static_cast<std::size_t>(i)].rgb[ch]);
    }
    return quantize(q);
  }();
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      if (!mask(x, y)) continue;
      bool matches = false;
      for (int i = 0; i < 5; ++i) {
        matches = matches || (img.at(x, y, 0) == dict_levels.at(i, 0, 0) && img.at(x, y, 1) == dict_levels.at(i, 0, 1) &&
                              img.at(x, y, 2) == dict_levels.at(i, 0, 2));
      }
      EXPECT_TRUE(matches) << x << "," << y;
    }
  }
}

class BlendCommandTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(20);
    save_image(testing::random_quantized_image(rng, 32, 32, 3), dir / "s.png");
    save_image(testing::random_quantized_image(rng, 32, 32, 3), dir / "d.png");
    save_image(testing::random_quantized_image(rng, 24, 32, 3), dir / "small.png");
    BinaryMask mask(32, 32);
    for (int y = 10; y < 20; ++y) {
      for (int x = 10; x < 20; ++x) mask.set(x, y, true);
    }
    save_mask(mask, dir / "m.png");
    mask.set(0, 15, true);
    save_mask(mask, dir / "edge.png");
    save_mask(BinaryMask(32, 32), dir / "empty.png");
  }

  int blend(const std::string& src, const std::string& dst, const std::string& mask, BlendMode mode,
            SolverConfig solver = {}) {
    out.str("");
    return cmd_blend(dir / src, dir / dst, dir / mask, mode, solver, dir / "o.png", out);
  }

  TempDir dir;
  std::ostringstream out;
};

TEST_F(BlendCommandTest, ExitCodes) {
  EXPECT_EQ(blend("s.png", "d.png", "m.png", BlendMode::guided), kExitOk);
  EXPECT_EQ(nlohmann::json::parse(out.str()).at("status"), "ok");
  EXPECT_EQ(blend("small.png", "d.png", "m.png", BlendMode::guided), kExitDimensionMismatch);
  EXPECT_EQ(blend("s.png", "d.png", "edge.png", BlendMode::guided), kExitMaskTouchesBorder);
  SolverConfig one;
  one.max_iterations = 1;
  EXPECT_EQ(blend("s.png", "d.png", "m.png", BlendMode::guided, one), kExitDidNotConverge);
  EXPECT_EQ(blend("s.png", "d.png", "missing.png", BlendMode::guided), kExitOtherError);
}

TEST_F(BlendCommandTest, EmptyMaskReturnsDestination) {
  for (BlendMode mode : {BlendMode::naive, BlendMode::guided, BlendMode::two_step}) {
    ASSERT_EQ(blend("s.png", "d.png", "empty.png", mode), kExitOk);
    EXPECT_EQ(load_image(dir / "o.png"), load_image(dir / "d.png"));
  }
}

TEST_F(BlendCommandTest, IdenticalInputsReproduceDestination) {
  ASSERT_EQ(blend("d.png", "d.png", "m.png", BlendMode::guided), kExitOk);
  const RasterImage o = load_image(dir / "o.png");
  const RasterImage d = load_image(dir / "d.png");
  EXPECT_LE(testing::max_abs_diff(o.data(), d.data()), 2.0 / 255.0);
}

TEST_F(BlendCommandTest, MetricsMatchLibrary) {
  ASSERT_EQ(blend("s.png", "d.png", "m.png", BlendMode::naive), kExitOk);
  std::ostringstream m;
  ASSERT_EQ(cmd_metrics(dir / "o.png", dir / "d.png", dir / "m.png", m), kExitOk);
  const auto j = nlohmann::json::parse(m.str());
  const RasterImage o = load_image(dir / "o.png");
  const BinaryMask mask = load_mask(dir / "m.png");
  EXPECT_EQ(j.at("seam_energy").get<double>(), seam_energy(o, mask));
  EXPECT_EQ(j.at("bleed_delta").get<double>(), bleed_delta(o, load_image(dir / "d.png"), mask));
  EXPECT_EQ(cmd_metrics(dir / "small.png", dir / "d.png", dir / "m.png", m), kExitDimensionMismatch);

  std::ostringstream same;
  ASSERT_EQ(cmd_metrics(dir / "d.png", dir / "d.png", dir / "m.png", same), kExitOk);
  EXPECT_EQ(nlohmann::json::parse(same.str()).at("bleed_delta").get<double>(), 0.0);
  std::ostringstream none;
  ASSERT_EQ(cmd_metrics(dir / "d.png", dir / "d.png", dir / "empty.png", none), kExitOk);
  EXPECT_TRUE(nlohmann::json::parse(none.str()).at("seam_energy").is_null());
}

TEST(ManifestTest, RecordedMetricsMatchRecomputation) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 3, 2, {40, 40}, 21);
  PipelineConfig c = simulate_config(data, dir / "out", 22);
  c.mode = BlendMode::naive;
  for (const auto& r : cmd_simulate(c).records) {
    if (r.status != "ok") continue;
    std::ostringstream m;
    ASSERT_EQ(cmd_metrics(dir / "out" / r.output_image, data.destinations / (r.destination_id + ".png"),
                          dir / "out" / r.output_mask, m),
              kExitOk);
    const auto j = nlohmann::json::parse(m.str());
    EXPECT_EQ(j.at("seam_energy").get<double>(), *r.seam_energy);
    EXPECT_EQ(j.at("bleed_delta").get<double>(), *r.bleed_delta);
  }
}

TEST(PipelineConfigTest, StrictParsing) {
  const auto j = nlohmann::json::parse(R"({
    "destination_dir": "dest", "exemplar_dir": "ex", "output_dir": "out",
    "mode": "guided", "seed": 9, "per_image_count": 3,
    "solver": {"method": "gauss_seidel", "tolerance": 1e-5, "max_iterations": 50},
    "placement": {"scale_min": 0.75}, "synth": {"colours": {"black": [0, 0, 0]}}
  })");
  const PipelineConfig c = PipelineConfig::from_json(j);
  EXPECT_EQ(c.mode, BlendMode::guided);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.per_image_count, 3);
  EXPECT_EQ(c.solver.method, SolverMethod::gauss_seidel);
  EXPECT_EQ(c.solver.max_iterations, 50u);
  EXPECT_EQ(c.placement.scale_min, 0.75);
  EXPECT_EQ(c.synth->colours.entries[3].rgb, (std::array<double, 3>{0.0, 0.0, 0.0}));
  EXPECT_EQ(PipelineConfig::from_json(c.to_json()).to_json(), c.to_json());

  EXPECT_THROW(PipelineConfig::from_json(nlohmann::json::parse(R"({"sede": 1})")), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(nlohmann::json::parse(R"({"mode": "blurry"})")), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(nlohmann::json::parse(R"({"seed": "x"})")), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(nlohmann::json::parse(R"({"solver": {"tol": 1}})")), ConfigError);
  EXPECT_THROW(PipelineConfig::from_file("/nonexistent/config.json"), ConfigError);
}

TEST(CliTest, BlendExitCodesFromBinary) {
  TempDir dir;
  Rng rng(30);
  save_image(testing::random_quantized_image(rng, 32, 32, 3), dir / "s.png");
  save_image(testing::random_quantized_image(rng, 32, 32, 3), dir / "d.png");
  save_image(testing::random_quantized_image(rng, 16, 32, 3), dir / "small.png");
  BinaryMask mask(32, 32);
  mask.set(16, 16, true);
  mask.set(17, 16, true);
  save_mask(mask, dir / "m.png");
  mask.set(31, 0, true);
  save_mask(mask, dir / "edge.png");
  const std::string base = "blend --destination " + (dir / "d.png").string() + " --out " + (dir / "o.png").string();
  const std::string src = " --source " + (dir / "s.png").string();
  const std::string ok_mask = " --mask " + (dir / "m.png").string();

  EXPECT_EQ(run_cli(base + src + ok_mask + " --mode guided").exit_code, 0);
  EXPECT_EQ(run_cli(base + " --source " + (dir / "small.png").string() + ok_mask).exit_code, 1);
  EXPECT_EQ(run_cli(base + src + " --mask " + (dir / "edge.png").string()).exit_code, 2);
  EXPECT_EQ(run_cli(base + src + ok_mask + " --max-iterations 1 --mode guided").exit_code, 3);
}

TEST(CliTest, FlagsOverrideConfigFile) {
  TempDir dir;
  const auto data = testing::make_dataset(dir.path(), 2, 1, {32, 32}, 31);
  nlohmann::json cfg = simulate_config(data, dir / "from_config", 1).to_json();
  cfg["per_image_count"] = 1;
  std::ofstream(dir / "run.json") << cfg.dump();
  const CliResult r = run_cli("simulate --config " + (dir / "run.json").string() + " --per-image-count 2 --output-dir " +
                              (dir / "flags").string() + " --mode naive");
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("records"), 4);
  EXPECT_FALSE(fs::exists(dir / "from_config"));
  const auto lines = SimulationManifest::read_jsonl(dir / "flags" / std::string(kManifestName));
  EXPECT_EQ(lines.at(0).at("mode"), "naive");

  EXPECT_EQ(run_cli("simulate --config " + (dir / "missing.json").string()).exit_code, 4);
}

}  // namespace
}  // namespace hairforge
