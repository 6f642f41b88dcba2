#include "hairforge/placement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "hairforge/errors.hpp"
#include "hairforge/morphology.hpp"
#include "hairforge/png_io.hpp"

namespace hairforge {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMaskSuffix = ".mask.png";

struct Vec2 {
  double x;
  double y;
};

// Similarity transform between exemplar and destination pixel coordinates.
class PlacementMap {
 public:
  PlacementMap(const PlacementSpec& spec, Size exemplar, Size dest)
      : spec_(spec),
        exemplar_centre_{(exemplar.width - 1) / 2.0, (exemplar.height - 1) / 2.0},
        dest_centre_{(dest.width - 1) / 2.0 + spec.offset_x, (dest.height - 1) / 2.0 + spec.offset_y} {
    // Quarter turns are exact so axis-aligned rotations permute pixels.
    const double quarter = spec.rotation_deg / 90.0;
    if (quarter == std::floor(quarter)) {
      static constexpr double kCos[4] = {1, 0, -1, 0};
      static constexpr double kSin[4] = {0, 1, 0, -1};
      const auto q = static_cast<std::size_t>(((static_cast<long>(quarter) % 4) + 4) % 4);
      cos_ = kCos[q];
      sin_ = kSin[q];
    } else {
      const double rad = spec.rotation_deg * std::numbers::pi / 180.0;
      cos_ = std::cos(rad);
      sin_ = std::sin(rad);
    }
  }

  Vec2 forward(Vec2 src) const {
    Vec2 v{src.x - exemplar_centre_.x, src.y - exemplar_centre_.y};
    if (spec_.flip_h) v.x = -v.x;
    if (spec_.flip_v) v.y = -v.y;
    v.x *= spec_.scale;
    v.y *= spec_.scale;
    return {cos_ * v.x - sin_ * v.y + dest_centre_.x, sin_ * v.x + cos_ * v.y + dest_centre_.y};
  }

  Vec2 inverse(Vec2 dst) const {
    const double dx = dst.x - dest_centre_.x;
    const double dy = dst.y - dest_centre_.y;
    Vec2 v{(cos_ * dx + sin_ * dy) / spec_.scale, (-sin_ * dx + cos_ * dy) / spec_.scale};
    if (spec_.flip_h) v.x = -v.x;
    if (spec_.flip_v) v.y = -v.y;
    return {v.x + exemplar_centre_.x, v.y + exemplar_centre_.y};
  }

 private:
  const PlacementSpec& spec_;
  Vec2 exemplar_centre_;
  Vec2 dest_centre_;
  double cos_ = 1.0;
  double sin_ = 0.0;
};

std::vector<double> mean_skin_colour(const HairExemplar& ex) {
  const int channels = ex.image.channels();
  std::vector<double> sum(static_cast<std::size_t>(channels), 0.0);
  std::vector<double> all(static_cast<std::size_t>(channels), 0.0);
  std::size_t skin = 0;
  for (int y = 0; y < ex.image.height(); ++y) {
    for (int x = 0; x < ex.image.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        all[static_cast<std::size_t>(c)] += ex.image.at(x, y, c);
        if (!ex.mask(x, y)) sum[static_cast<std::size_t>(c)] += ex.image.at(x, y, c);
      }
      if (!ex.mask(x, y)) ++skin;
    }
  }
  const double n = skin > 0 ? static_cast<double>(skin) : static_cast<double>(ex.image.size().area());
  auto& src = skin > 0 ? sum : all;
  for (double& v : src) v /= n;
  return src;
}

double bilinear(const RasterImage& img, double x, double y, int c) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
  const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace

void HairExemplar::validate() const {
  if (image.size() != mask.size()) throw DimensionMismatch("exemplar '" + id + "': image and mask sizes differ");
  if (mask.empty()) throw EmptyRegion("exemplar '" + id + "': hair mask is empty");
}

std::vector<HairExemplar> load_exemplar_library(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw FileNotFound("exemplar directory not found: " + dir.string());
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() <= kMaskSuffix.size() || !name.ends_with(kMaskSuffix)) continue;
    const std::string id = name.substr(0, name.size() - kMaskSuffix.size());
    if (fs::is_regular_file(dir / (id + ".png"), ec)) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());

  std::vector<HairExemplar> library;
  library.reserve(ids.size());
  for (const auto& id : ids) {
    HairExemplar ex{id, load_image(dir / (id + ".png")), load_mask(dir / (id + std::string(kMaskSuffix))), ""};
    std::ifstream provenance(dir / (id + ".provenance.txt"));
    if (provenance) {
      std::ostringstream text;
      text << provenance.rdbuf();
      ex.provenance = text.str();
      while (!ex.provenance.empty() && (ex.provenance.back() == '\n' || ex.provenance.back() == '\r')) {
        ex.provenance.pop_back();
      }
    }
    ex.validate();
    library.push_back(std::move(ex));
  }
  return library;
}

void PlacementSpec::validate() const {
  if (!(rotation_deg >= 0.0 && rotation_deg < 360.0)) throw ConfigError("rotation must lie in [0, 360)");
  if (!(scale >= 0.5 && scale <= 2.0)) throw ConfigError("scale must lie in [0.5, 2]");
  if (mask_dilation < 0) throw ConfigError("mask_dilation must be non-negative");
}

void PlacementRanges::validate() const {
  if (!(scale_min >= 0.5 && scale_max <= 2.0 && scale_min <= scale_max)) {
    throw ConfigError("scale range must lie within [0.5, 2] with min <= max");
  }
  if (!(max_offset_fraction >= 0.0)) throw ConfigError("max_offset_fraction must be non-negative");
  if (mask_dilation < 0) throw ConfigError("mask_dilation must be non-negative");
}

BinaryMask transform_mask(const HairExemplar& ex, const PlacementSpec& spec, Size dest_size) {
  spec.validate();
  ex.validate();
  const PlacementMap map(spec, ex.mask.size(), dest_size);

  // Destination-space bounds of the transformed mask footprint.
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (int y = 0; y < ex.mask.height(); ++y) {
    for (int x = 0; x < ex.mask.width(); ++x) {
      if (!ex.mask(x, y)) continue;
      for (const Vec2 corner : {Vec2{x - 0.5, y - 0.5}, Vec2{x + 0.5, y - 0.5}, Vec2{x - 0.5, y + 0.5},
                                Vec2{x + 0.5, y + 0.5}}) {
        const Vec2 p = map.forward(corner);
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
      }
    }
  }

  // Resample over the union of the canvas and the footprint so pixels that
  // land off-canvas are detected rather than silently clipped.
  const int grow = spec.mask_dilation + 2;
  const int x_lo = std::min(0, static_cast<int>(std::floor(min_x)) - grow);
  const int y_lo = std::min(0, static_cast<int>(std::floor(min_y)) - grow);
  const int x_hi = std::max(dest_size.width - 1, static_cast<int>(std::ceil(max_x)) + grow);
  const int y_hi = std::max(dest_size.height - 1, static_cast<int>(std::ceil(max_y)) + grow);

  BinaryMask region(x_hi - x_lo + 1, y_hi - y_lo + 1);
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      const Vec2 s = map.inverse({static_cast<double>(x), static_cast<double>(y)});
      const long sx = round_half_away(s.x);
      const long sy = round_half_away(s.y);
      if (sx >= 0 && sy >= 0 && sx < ex.mask.width() && sy < ex.mask.height() &&
          ex.mask(static_cast<int>(sx), static_cast<int>(sy))) {
        region.set(x - x_lo, y - y_lo, true);
      }
    }
  }
  region = dilate(region, spec.mask_dilation);

  if (region.empty()) throw EmptyAfterTransform("placement of '" + ex.id + "' leaves an empty mask");
  BinaryMask out(dest_size.width, dest_size.height);
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      if (!region(x - x_lo, y - y_lo)) continue;
      if (x < 1 || y < 1 || x >= dest_size.width - 1 || y >= dest_size.height - 1) {
        throw MaskOutOfBounds("placement of '" + ex.id + "' violates the 1-pixel border margin");
      }
      out.set(x, y, true);
    }
  }
  return out;
}

Placement transform_exemplar(const HairExemplar& ex, const PlacementSpec& spec, Size dest_size) {
  BinaryMask mask = transform_mask(ex, spec, dest_size);
  const PlacementMap map(spec, ex.image.size(), dest_size);
  const std::vector<double> fill = mean_skin_colour(ex);
  const int channels = ex.image.channels();
  const double max_x = ex.image.width() - 1;
  const double max_y = ex.image.height() - 1;

  RasterImage source(dest_size.width, dest_size.height, channels);
  for (int y = 0; y < dest_size.height; ++y) {
    for (int x = 0; x < dest_size.width; ++x) {
      const Vec2 s = map.inverse({static_cast<double>(x), static_cast<double>(y)});
      const bool inside = s.x >= 0.0 && s.y >= 0.0 && s.x <= max_x && s.y <= max_y;
      for (int c = 0; c < channels; ++c) {
        source.set(x, y, c, inside ? bilinear(ex.image, s.x, s.y, c) : fill[static_cast<std::size_t>(c)]);
      }
    }
  }
  return {spec, std::move(source), std::move(mask)};
}

PlacementSpec sample_placement(const HairExemplar& ex, const RasterImage& dest, Rng& rng, int max_attempts,
                               const PlacementRanges& ranges) {
  if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  ranges.validate();
  const double reach_x = ranges.max_offset_fraction * dest.width();
  const double reach_y = ranges.max_offset_fraction * dest.height();
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    PlacementSpec spec;
    spec.exemplar_id = ex.id;
    spec.rotation_deg = rng.uniform(0.0, 360.0);
    spec.scale = rng.uniform(ranges.scale_min, ranges.scale_max);
    spec.flip_h = rng.coin();
    spec.flip_v = rng.coin();
    spec.offset_x = static_cast<int>(round_half_away(rng.uniform(-reach_x, reach_x)));
    spec.offset_y = static_cast<int>(round_half_away(rng.uniform(-reach_y, reach_y)));
    spec.mask_dilation = ranges.mask_dilation;
    try {
      transform_mask(ex, spec, dest.size());
      return spec;
    } catch (const MaskOutOfBounds&) {
    } catch (const EmptyAfterTransform&) {
    }
  }
  throw NoFeasiblePlacement("no feasible placement for '" + ex.id + "' after " + std::to_string(max_attempts) +
                            " attempts");
}

}  // namespace hairforge
