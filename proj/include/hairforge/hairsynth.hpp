#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hairforge/image.hpp"
#include "hairforge/rng.hpp"

namespace hairforge {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Cubic Bezier medial curve with a half-width and a colour dictionary index.
struct HairStroke {
  std::array<Point, 4> control_points;
  double radius = 1.0;
  int colour_id = 0;

  // Throws ConfigError unless the stroke has two distinct control points,
  // radius in [0.5, 5] and a colour id in [0, 4].
  void validate() const;
  Point evaluate(double t) const;
  double control_polygon_length() const;

  friend bool operator==(const HairStroke&, const HairStroke&) = default;
};

struct NamedColour {
  std::string name;
  std::array<double, 3> rgb;
};

struct ColourDictionary {
  static constexpr std::size_t kSize = 5;
  std::array<NamedColour, kSize> entries;

  // yellow, brown, white, black, grey.
  static ColourDictionary standard();
  void validate() const;
};

struct SynthConfig {
  int stroke_count = 20;
  double radius_min = 0.5;
  double radius_max = 5.0;
  double blur_sigma = 1.0;
  std::uint64_t seed = 0;
  Size canvas{};
  ColourDictionary colours = ColourDictionary::standard();

  void validate() const;
};

// Draws config.stroke_count strokes. Control points are uniform over the
// canvas, resampled until the endpoints are at least 0.3*min(width,height)
// apart.
std::vector<HairStroke> sample_strokes(const SynthConfig& config, Rng& rng);

// Samples the curve at >= 4x its control-polygon length, marks the nearest
// pixel of each sample, then dilates by round(radius). Pixels off the canvas
// are clipped after dilation, so strokes just outside still reach in.
BinaryMask rasterize_stroke(const HairStroke& stroke, Size canvas);

// Separable Gaussian with zero padding outside the plane. sigma 0 copies.
Plane gaussian_blur(const Plane& plane, double sigma);

struct SynthResult {
  RasterImage image;
  // Union of the unblurred stroke masks.
  BinaryMask mask;
  std::vector<HairStroke> strokes;
};

// Composites strokes back to front over `base`, each weighted by its own
// blurred stroke mask. The generator is seeded from config.seed.
// Throws DimensionMismatch if base is not config.canvas sized.
SynthResult render_hair(const SynthConfig& config, const RasterImage& base);

}  // namespace hairforge
