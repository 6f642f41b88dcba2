#include "hairforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <thread>

#include "hairforge/errors.hpp"
#include "hairforge/metrics.hpp"
#include "hairforge/png_io.hpp"
#include "hairforge/rng.hpp"
#include "log.hpp"

namespace hairforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kMaskSuffix = ".mask.png";

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> known, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

SolverConfig solver_from_json(const json& j) {
  reject_unknown_keys(j, {"method", "max_iterations", "tolerance"}, "solver");
  SolverConfig s;
  std::string method{to_string(s.method)};
  read_key(j, "method", method);
  const auto parsed = parse_solver_method(method);
  if (!parsed) throw ConfigError("unknown solver method '" + method + "'");
  s.method = *parsed;
  read_key(j, "max_iterations", s.max_iterations);
  read_key(j, "tolerance", s.tolerance);
  return s;
}

SynthConfig synth_from_json(const json& j) {
  reject_unknown_keys(j, {"stroke_count", "radius_min", "radius_max", "blur_sigma", "colours"}, "synth");
  SynthConfig s;
  read_key(j, "stroke_count", s.stroke_count);
  read_key(j, "radius_min", s.radius_min);
  read_key(j, "radius_max", s.radius_max);
  read_key(j, "blur_sigma", s.blur_sigma);
  if (j.contains("colours")) {
    const json& colours = j.at("colours");
    if (!colours.is_object()) throw ConfigError("synth.colours must map colour names to [r,g,b]");
    for (const auto& [name, value] : colours.items()) {
      auto it = std::find_if(s.colours.entries.begin(), s.colours.entries.end(),
                             [&](const NamedColour& c) { return c.name == name; });
      if (it == s.colours.entries.end()) throw ConfigError("unknown dictionary colour '" + name + "'");
      try {
        it->rgb = value.get<std::array<double, 3>>();
      } catch (const json::exception& e) {
        throw ConfigError("colour '" + name + "': " + e.what());
      }
    }
  }
  return s;
}

PlacementRanges placement_from_json(const json& j) {
  reject_unknown_keys(j, {"scale_min", "scale_max", "max_offset_fraction", "mask_dilation"}, "placement");
  PlacementRanges p;
  read_key(j, "scale_min", p.scale_min);
  read_key(j, "scale_max", p.scale_max);
  read_key(j, "max_offset_fraction", p.max_offset_fraction);
  read_key(j, "mask_dilation", p.mask_dilation);
  return p;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Matches the destination's channel count: grey to RGB replicates, RGB to
// grey averages.
RasterImage match_channels(const RasterImage& img, int channels) {
  if (img.channels() == channels) return img;
  RasterImage out(img.width(), img.height(), channels);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (channels == 3) {
        for (int c = 0; c < 3; ++c) out.set(x, y, c, img.at(x, y, 0));
      } else {
        out.set(x, y, 0, (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0);
      }
    }
  }
  return out;
}

void require_dir(const fs::path& dir, const char* what) {
  std::error_code ec;
  if (dir.empty() || !fs::is_directory(dir, ec)) throw ConfigError(std::string(what) + " does not exist: " + dir.string());
}

void prepare_output_dir(const fs::path& dir) {
  if (dir.empty()) throw ConfigError("output_dir is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void validate_common(const PipelineConfig& config) {
  if (config.per_image_count < 1) throw ConfigError("per_image_count must be at least 1");
  if (config.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  config.solver.validate();
  config.placement.validate();
  require_dir(config.destination_dir, "destination_dir");
  std::error_code ec;
  if (config.hairfree_list && !fs::is_regular_file(*config.hairfree_list, ec)) {
    throw ConfigError("hairfree_list does not exist: " + config.hairfree_list->string());
  }
}

std::string record_stem(const std::string& destination_id, int index) {
  return destination_id + "_" + std::to_string(index);
}

// Runs `work(i)` for i in [0, count) over a pool of threads. Each index is
// handled exactly once; results are stored by index so order is fixed.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& work) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) work(i);
    });
  }
}

struct Job {
  std::string destination_id;
  int index;
};

std::vector<Job> plan_jobs(const std::vector<std::string>& destinations, int per_image_count) {
  std::vector<Job> jobs;
  for (const auto& id : destinations) {
    for (int k = 0; k < per_image_count; ++k) jobs.push_back({id, k});
  }
  return jobs;
}

// Quantizes, writes image + mask, and fills metrics from the quantized output
// so re-measuring the written files reproduces them exactly.
void emit_outputs(const PipelineConfig& config, const RasterImage& blended, const RasterImage& destination,
                  const BinaryMask& mask, ManifestRecord& record) {
  const RasterImage output = quantize(blended);
  const std::string stem = record_stem(record.destination_id, record.index);
  record.output_image = stem + ".png";
  record.output_mask = stem + std::string(kMaskSuffix);
  save_image(output, config.output_dir / record.output_image);
  save_mask(mask, config.output_dir / record.output_mask);
  try {
    record.seam_energy = seam_energy(output, mask);
  } catch (const EmptyBoundary&) {
  }
  try {
    record.bleed_delta = bleed_delta(output, destination, mask);
  } catch (const EmptyAnnulus&) {
  }
}

SimulationManifest run_batch(const PipelineConfig& config,
                             const std::function<void(const RasterImage&, ManifestRecord&)>& produce) {
  const std::vector<std::string> destinations = list_destinations(config);
  if (destinations.empty()) throw ConfigError("no destination images found in " + config.destination_dir.string());
  prepare_output_dir(config.output_dir);

  const std::vector<Job> jobs = plan_jobs(destinations, config.per_image_count);
  SimulationManifest manifest;
  manifest.records.resize(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    ManifestRecord& record = manifest.records[i];
    record.destination_id = jobs[i].destination_id;
    record.index = jobs[i].index;
    record.seed = derive_seed(config.seed, record.destination_id, static_cast<std::uint64_t>(record.index));
    try {
      const RasterImage destination = load_image(config.destination_dir / (record.destination_id + ".png"));
      produce(destination, record);
    } catch (const NoFeasiblePlacement& e) {
      record.status = "no_feasible_placement";
      record.message = e.what();
    } catch (const DidNotConverge& e) {
      record.status = "did_not_converge";
      record.message = e.what();
      record.solver_iterations = e.iterations();
      record.final_residual = e.residual();
    } catch (const Error& e) {
      record.status = "error";
      record.message = e.what();
    }
    if (record.status != "ok") {
      record.output_image.clear();
      record.output_mask.clear();
      record.seam_energy.reset();
      record.bleed_delta.reset();
      detail::log().warn("{}: {}", record_stem(record.destination_id, record.index), record.message);
    } else {
      detail::log().info("{}: ok ({} iterations)", record_stem(record.destination_id, record.index),
                         record.solver_iterations);
    }
  });

  manifest.write_jsonl(config.output_dir / kManifestName);
  return manifest;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
  reject_unknown_keys(j,
                      {"destination_dir", "hairfree_list", "exemplar_dir", "output_dir", "mode", "solver",
                       "per_image_count", "seed", "placement", "max_attempts", "threads", "synth"},
                      "config");
  PipelineConfig c;
  std::string path;
  if (j.contains("destination_dir")) {
    read_key(j, "destination_dir", path);
    c.destination_dir = path;
  }
  if (j.contains("hairfree_list") && !j.at("hairfree_list").is_null()) {
    read_key(j, "hairfree_list", path);
    c.hairfree_list = fs::path(path);
  }
  if (j.contains("exemplar_dir")) {
    read_key(j, "exemplar_dir", path);
    c.exemplar_dir = path;
  }
  if (j.contains("output_dir")) {
    read_key(j, "output_dir", path);
    c.output_dir = path;
  }
  if (j.contains("mode")) {
    std::string mode;
    read_key(j, "mode", mode);
    const auto parsed = parse_blend_mode(mode);
    if (!parsed) throw ConfigError("unknown blend mode '" + mode + "'");
    c.mode = *parsed;
  }
  if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
  read_key(j, "per_image_count", c.per_image_count);
  read_key(j, "seed", c.seed);
  if (j.contains("placement")) c.placement = placement_from_json(j.at("placement"));
  read_key(j, "max_attempts", c.max_attempts);
  read_key(j, "threads", c.threads);
  if (j.contains("synth") && !j.at("synth").is_null()) c.synth = synth_from_json(j.at("synth"));
  return c;
}

PipelineConfig PipelineConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json PipelineConfig::to_json() const {
  json j = {
      {"destination_dir", destination_dir.string()},
      {"exemplar_dir", exemplar_dir.string()},
      {"output_dir", output_dir.string()},
      {"hairfree_list", hairfree_list ? json(hairfree_list->string()) : json(nullptr)},
      {"mode", std::string(hairforge::to_string(mode))},
      {"solver",
       {{"method", std::string(hairforge::to_string(solver.method))},
        {"max_iterations", solver.max_iterations},
        {"tolerance", solver.tolerance}}},
      {"per_image_count", per_image_count},
      {"seed", seed},
      {"placement",
       {{"scale_min", placement.scale_min},
        {"scale_max", placement.scale_max},
        {"max_offset_fraction", placement.max_offset_fraction},
        {"mask_dilation", placement.mask_dilation}}},
      {"max_attempts", max_attempts},
      {"threads", threads},
  };
  if (synth) {
    json colours = json::object();
    for (const auto& c : synth->colours.entries) colours[c.name] = c.rgb;
    j["synth"] = {{"stroke_count", synth->stroke_count},
                  {"radius_min", synth->radius_min},
                  {"radius_max", synth->radius_max},
                  {"blur_sigma", synth->blur_sigma},
                  {"colours", colours}};
  } else {
    j["synth"] = nullptr;
  }
  return j;
}

json to_json(const PlacementSpec& spec) {
  return {{"exemplar_id", spec.exemplar_id}, {"rotation_deg", spec.rotation_deg}, {"scale", spec.scale},
          {"flip_h", spec.flip_h},           {"flip_v", spec.flip_v},             {"offset_x", spec.offset_x},
          {"offset_y", spec.offset_y},       {"mask_dilation", spec.mask_dilation}};
}

json ManifestRecord::to_json() const {
  return {
      {"destination_id", destination_id},
      {"index", index},
      {"seed", seed},
      {"status", status},
      {"message", message},
      {"output_image", output_image.empty() ? json(nullptr) : json(output_image)},
      {"output_mask", output_mask.empty() ? json(nullptr) : json(output_mask)},
      {"exemplar_id", exemplar_id},
      {"placement", placement ? hairforge::to_json(*placement) : json(nullptr)},
      {"mode", mode},
      {"solver_iterations", solver_iterations},
      {"final_residual", final_residual},
      {"seam_energy", optional_number(seam_energy)},
      {"bleed_delta", optional_number(bleed_delta)},
  };
}

void SimulationManifest::write_jsonl(const fs::path& path) const {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    for (const auto& r : records) out << r.to_json().dump() << '\n';
    if (!out) throw IoError("failed to write manifest " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("failed to move manifest into place: " + path.string());
}

std::vector<json> SimulationManifest::read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("manifest not found: " + path.string());
  std::vector<json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(json::parse(line));
  }
  return lines;
}

std::vector<std::string> list_destinations(const PipelineConfig& config) {
  require_dir(config.destination_dir, "destination_dir");
  std::set<std::string> available;
  for (const auto& entry : fs::directory_iterator(config.destination_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const std::string name = entry.path().filename().string();
    if (name.ends_with(kMaskSuffix)) continue;
    available.insert(entry.path().stem().string());
  }
  if (!config.hairfree_list) return {available.begin(), available.end()};

  std::ifstream in(*config.hairfree_list);
  if (!in) throw ConfigError("cannot read hairfree_list " + config.hairfree_list->string());
  std::set<std::string> selected;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string id = line.substr(first, last - first + 1);
    if (id.ends_with(".png")) id.resize(id.size() - 4);
    if (!available.contains(id)) throw ConfigError("hairfree_list names a missing destination: " + id);
    selected.insert(id);
  }
  return {selected.begin(), selected.end()};
}

SimulationManifest cmd_simulate(const PipelineConfig& config) {
  validate_common(config);
  require_dir(config.exemplar_dir, "exemplar_dir");
  const std::vector<HairExemplar> library = load_exemplar_library(config.exemplar_dir);
  if (library.empty()) throw ConfigError("no exemplars found in " + config.exemplar_dir.string());

  return run_batch(config, [&](const RasterImage& destination, ManifestRecord& record) {
    record.mode = std::string(to_string(config.mode));
    Rng rng(record.seed);
    const HairExemplar& ex = library[rng.index(library.size())];
    record.exemplar_id = ex.id;
    const PlacementSpec spec = sample_placement(ex, destination, rng, config.max_attempts, config.placement);
    record.placement = spec;
    const Placement placement = transform_exemplar(ex, spec, destination.size());

    const BlendRequest request{match_channels(placement.resolved_source, destination.channels()), destination,
                               placement.resolved_mask, config.mode, config.solver};
    const BlendResult result = blend(request);
    record.solver_iterations = result.diagnostics.total_iterations();
    record.final_residual = result.diagnostics.max_residual();
    emit_outputs(config, result.image, destination, placement.resolved_mask, record);
  });
}

SimulationManifest cmd_synth(const PipelineConfig& config) {
  if (!config.synth) throw ConfigError("synth settings are required for the synth command");
  validate_common(config);

  return run_batch(config, [&](const RasterImage& destination, ManifestRecord& record) {
    record.mode = std::string(kSyntheticMode);
    record.exemplar_id = std::string(kSyntheticExemplar);
    SynthConfig synth = *config.synth;
    synth.canvas = destination.size();
    synth.seed = record.seed;
    const SynthResult result = render_hair(synth, destination);
    emit_outputs(config, result.image, destination, result.mask, record);
  });
}

int cmd_blend(const fs::path& source, const fs::path& destination, const fs::path& mask, BlendMode mode,
              const SolverConfig& solver, const fs::path& output, std::ostream& out) {
  json line = {{"mode", std::string(to_string(mode))}};
  int code = kExitOk;
  try {
    const BlendRequest request{load_image(source), load_image(destination), load_mask(mask), mode, solver};
    const BlendResult result = blend(request);
    save_image(result.image, output);
    json solves = json::array();
    for (const auto& s : result.diagnostics.solves) solves.push_back({{"iterations", s.iterations}, {"residual", s.residual}});
    line["status"] = "ok";
    line["iterations"] = result.diagnostics.total_iterations();
    line["residual"] = result.diagnostics.max_residual();
    line["solves"] = solves;
    line["output"] = output.string();
  } catch (const DimensionMismatch& e) {
    code = kExitDimensionMismatch;
    line["status"] = "dimension_mismatch";
    line["message"] = e.what();
  } catch (const MaskTouchesBorder& e) {
    code = kExitMaskTouchesBorder;
    line["status"] = "mask_touches_border";
    line["message"] = e.what();
  } catch (const DidNotConverge& e) {
    code = kExitDidNotConverge;
    line["status"] = "did_not_converge";
    line["message"] = e.what();
    line["iterations"] = e.iterations();
    line["residual"] = e.residual();
  } catch (const Error& e) {
    code = kExitOtherError;
    line["status"] = "error";
    line["message"] = e.what();
  }
  out << line.dump() << '\n';
  return code;
}

int cmd_metrics(const fs::path& image, const fs::path& destination, const fs::path& mask, std::ostream& out) {
  json line;
  int code = kExitOk;
  try {
    const RasterImage img = load_image(image);
    const RasterImage dest = load_image(destination);
    const BinaryMask m = load_mask(mask);
    if (img.size() != dest.size() || img.size() != m.size() || img.channels() != dest.channels()) {
      throw DimensionMismatch("image, destination and mask must share dimensions");
    }
    std::optional<double> seam;
    std::optional<double> bleed;
    try {
      seam = seam_energy(img, m);
    } catch (const EmptyBoundary&) {
    }
    try {
      bleed = bleed_delta(img, dest, m);
    } catch (const EmptyAnnulus&) {
    }
    line = {{"seam_energy", optional_number(seam)}, {"bleed_delta", optional_number(bleed)}};
  } catch (const DimensionMismatch& e) {
    code = kExitDimensionMismatch;
    line = {{"status", "dimension_mismatch"}, {"message", e.what()}};
  } catch (const Error& e) {
    code = kExitOtherError;
    line = {{"status", "error"}, {"message", e.what()}};
  }
  out << line.dump() << '\n';
  return code;
}

}  // namespace hairforge
