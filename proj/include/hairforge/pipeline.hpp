#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hairforge/hairsynth.hpp"
#include "hairforge/placement.hpp"
#include "hairforge/poisson.hpp"

namespace hairforge {

// Exit codes of the `blend` and `metrics` subcommands.
enum ExitCode : int {
  kExitOk = 0,
  kExitDimensionMismatch = 1,
  kExitMaskTouchesBorder = 2,
  kExitDidNotConverge = 3,
  kExitOtherError = 4,
};

inline constexpr std::string_view kManifestName = "manifest.jsonl";
inline constexpr std::string_view kSyntheticMode = "synthetic-baseline";
inline constexpr std::string_view kSyntheticExemplar = "synthetic";

struct PipelineConfig {
  std::filesystem::path destination_dir;
  // Newline-delimited destination ids; blank lines and '#' comments skipped.
  std::optional<std::filesystem::path> hairfree_list;
  std::filesystem::path exemplar_dir;
  std::filesystem::path output_dir;
  BlendMode mode = BlendMode::two_step;
  SolverConfig solver;
  int per_image_count = 1;
  std::uint64_t seed = 0;
  PlacementRanges placement;
  int max_attempts = 100;
  // Worker threads for records; 0 picks the hardware concurrency.
  unsigned threads = 0;
  // Baseline synthesizer settings; canvas and seed are filled per record.
  std::optional<SynthConfig> synth;

  // Throws ConfigError on unknown keys or ill-typed values.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

nlohmann::json to_json(const PlacementSpec& spec);

struct ManifestRecord {
  std::string destination_id;
  int index = 0;
  std::uint64_t seed = 0;
  // "ok", "no_feasible_placement", "did_not_converge" or "error".
  std::string status = "ok";
  std::string message;
  // File names relative to the output directory; empty when nothing was written.
  std::string output_image;
  std::string output_mask;
  std::string exemplar_id;
  std::optional<PlacementSpec> placement;
  std::string mode;
  std::size_t solver_iterations = 0;
  double final_residual = 0.0;
  std::optional<double> seam_energy;
  std::optional<double> bleed_delta;

  nlohmann::json to_json() const;
};

struct SimulationManifest {
  std::vector<ManifestRecord> records;

  // One JSON object per line, in record order.
  void write_jsonl(const std::filesystem::path& path) const;
  static std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
};

// Destination ids in sorted order, filtered by the hair-free list if given.
std::vector<std::string> list_destinations(const PipelineConfig& config);

// Blends sampled exemplar placements onto every destination, per_image_count
// times each, writing `<dest>_<k>.png`, `<dest>_<k>.mask.png` and the
// manifest into output_dir. Record failures are logged in the manifest.
SimulationManifest cmd_simulate(const PipelineConfig& config);

// Same output contract, with hair from the baseline synthesizer.
SimulationManifest cmd_synth(const PipelineConfig& config);

// Single blend; prints one JSON diagnostics line to `out` and returns an
// ExitCode.
int cmd_blend(const std::filesystem::path& source, const std::filesystem::path& destination,
              const std::filesystem::path& mask, BlendMode mode, const SolverConfig& solver,
              const std::filesystem::path& output, std::ostream& out);

// Prints {"seam_energy": ..., "bleed_delta": ...}; metrics that are undefined
// for the mask print as null.
int cmd_metrics(const std::filesystem::path& image, const std::filesystem::path& destination,
                const std::filesystem::path& mask, std::ostream& out);

}  // namespace hairforge
