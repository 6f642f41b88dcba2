#include "hairforge/hairsynth.hpp"

#include <algorithm>
#include <cmath>

#include "hairforge/errors.hpp"
#include "hairforge/morphology.hpp"

namespace hairforge {

namespace {

constexpr double kMinRadius = 0.5;
constexpr double kMaxRadius = 5.0;
constexpr double kMinEndpointFraction = 0.3;

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

void HairStroke::validate() const {
  bool distinct = false;
  for (std::size_t i = 1; i < control_points.size(); ++i) {
    if (control_points[i].x != control_points[0].x || control_points[i].y != control_points[0].y) distinct = true;
  }
  if (!distinct) throw ConfigError("hair stroke needs at least two distinct control points");
  if (!(radius >= kMinRadius && radius <= kMaxRadius)) throw ConfigError("hair stroke radius outside [0.5, 5]");
  if (colour_id < 0 || colour_id >= static_cast<int>(ColourDictionary::kSize)) {
    throw ConfigError("hair stroke colour id outside [0, 4]");
  }
}

Point HairStroke::evaluate(double t) const {
  const double u = 1.0 - t;
  const double b0 = u * u * u;
  const double b1 = 3.0 * u * u * t;
  const double b2 = 3.0 * u * t * t;
  const double b3 = t * t * t;
  const auto& p = control_points;
  return {b0 * p[0].x + b1 * p[1].x + b2 * p[2].x + b3 * p[3].x, b0 * p[0].y + b1 * p[1].y + b2 * p[2].y + b3 * p[3].y};
}

double HairStroke::control_polygon_length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < control_points.size(); ++i) len += distance(control_points[i - 1], control_points[i]);
  return len;
}

ColourDictionary ColourDictionary::standard() {
  return ColourDictionary{{{
      {"yellow", {0.88, 0.79, 0.47}},
      {"brown", {0.35, 0.22, 0.12}},
      {"white", {0.92, 0.92, 0.90}},
      {"black", {0.06, 0.06, 0.06}},
      {"grey", {0.55, 0.55, 0.55}},
  }}};
}

void ColourDictionary::validate() const {
  for (const auto& e : entries) {
    for (double v : e.rgb) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("colour '" + e.name + "' has a component outside [0,1]");
    }
  }
}

void SynthConfig::validate() const {
  if (stroke_count < 1) throw ConfigError("stroke_count must be at least 1");
  if (!(radius_min >= kMinRadius && radius_max <= kMaxRadius && radius_min <= radius_max)) {
    throw ConfigError("radius range must lie within [0.5, 5] with min <= max");
  }
  if (!(blur_sigma >= 0.0)) throw ConfigError("blur_sigma must be non-negative");
  if (canvas.width < 1 || canvas.height < 1) throw ConfigError("canvas must be non-empty");
  colours.validate();
}

std::vector<HairStroke> sample_strokes(const SynthConfig& config, Rng& rng) {
  config.validate();
  const double min_span = kMinEndpointFraction * std::min(config.canvas.width, config.canvas.height);
  std::vector<HairStroke> strokes;
  strokes.reserve(static_cast<std::size_t>(config.stroke_count));
  for (int s = 0; s < config.stroke_count; ++s) {
    HairStroke stroke;
    do {
      for (auto& p : stroke.control_points) {
        p.x = rng.uniform(0.0, config.canvas.width);
        p.y = rng.uniform(0.0, config.canvas.height);
      }
    } while (distance(stroke.control_points.front(), stroke.control_points.back()) < min_span);
    stroke.radius = rng.uniform(config.radius_min, config.radius_max);
    stroke.colour_id = static_cast<int>(rng.index(ColourDictionary::kSize));
    strokes.push_back(stroke);
  }
  return strokes;
}

BinaryMask rasterize_stroke(const HairStroke& stroke, Size canvas) {
  stroke.validate();
  const int r = static_cast<int>(round_half_away(stroke.radius));
  // Rasterize on a canvas padded by the dilation radius, then crop.
  const int pad = r + 1;
  BinaryMask padded(canvas.width + 2 * pad, canvas.height + 2 * pad);
  const auto samples = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(4.0 * stroke.control_polygon_length())) + 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const Point p = stroke.evaluate(static_cast<double>(i) / static_cast<double>(samples - 1));
    const long px = round_half_away(p.x) + pad;
    const long py = round_half_away(p.y) + pad;
    if (px >= 0 && py >= 0 && px < padded.width() && py < padded.height()) {
      padded.set(static_cast<int>(px), static_cast<int>(py), true);
    }
  }
  const BinaryMask grown = dilate(padded, r);
  BinaryMask out(canvas.width, canvas.height);
  for (int y = 0; y < canvas.height; ++y) {
    for (int x = 0; x < canvas.width; ++x) out.set(x, y, grown(x + pad, y + pad));
  }
  return out;
}

Plane gaussian_blur(const Plane& plane, double sigma) {
  if (sigma <= 0.0) return plane;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-(k * k) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;

  const int width = plane.width();
  const int height = plane.height();
  Plane rows(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int sx = x + k;
        if (sx >= 0 && sx < width) v += kernel[static_cast<std::size_t>(k + radius)] * plane(sx, y);
      }
      rows(x, y) = v;
    }
  }
  Plane out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int sy = y + k;
        if (sy >= 0 && sy < height) v += kernel[static_cast<std::size_t>(k + radius)] * rows(x, sy);
      }
      out(x, y) = v;
    }
  }
  return out;
}

SynthResult render_hair(const SynthConfig& config, const RasterImage& base) {
  config.validate();
  if (base.size() != config.canvas) throw DimensionMismatch("render_hair: base image does not match the canvas");

  Rng rng(config.seed);
  SynthResult result{base, BinaryMask(base.width(), base.height()), sample_strokes(config, rng)};
  RasterImage& image = result.image;

  for (const HairStroke& stroke : result.strokes) {
    const BinaryMask stroke_mask = rasterize_stroke(stroke, config.canvas);
    result.mask = result.mask | stroke_mask;

    Plane alpha(base.width(), base.height());
    for (int y = 0; y < base.height(); ++y) {
      for (int x = 0; x < base.width(); ++x) alpha(x, y) = stroke_mask(x, y) ? 1.0 : 0.0;
    }
    alpha = gaussian_blur(alpha, config.blur_sigma);

    const auto& rgb = config.colours.entries[static_cast<std::size_t>(stroke.colour_id)].rgb;
    const double grey = (rgb[0] + rgb[1] + rgb[2]) / 3.0;
    for (int y = 0; y < base.height(); ++y) {
      for (int x = 0; x < base.width(); ++x) {
        const double a = alpha(x, y);
        if (a <= 0.0) continue;
        for (int c = 0; c < image.channels(); ++c) {
          const double colour = image.channels() == 3 ? rgb[static_cast<std::size_t>(c)] : grey;
          // a == 1 writes the colour exactly, so hard strokes are exact.
          image.set(x, y, c, a >= 1.0 ? colour : image.at(x, y, c) * (1.0 - a) + colour * a);
        }
      }
    }
  }
  return result;
}

}  // namespace hairforge
