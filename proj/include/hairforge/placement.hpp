#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hairforge/image.hpp"
#include "hairforge/rng.hpp"

namespace hairforge {

// A real hairy image with its pre-segmented hair mask.
struct HairExemplar {
  std::string id;
  RasterImage image;
  BinaryMask mask;
  std::string provenance;

  // Throws DimensionMismatch / EmptyRegion.
  void validate() const;
};

// Loads every `<id>.png` that has a matching `<id>.mask.png` in `dir`, sorted
// by id. An optional `<id>.provenance.txt` fills the provenance field.
std::vector<HairExemplar> load_exemplar_library(const std::filesystem::path& dir);

// Maps exemplar pixels onto the destination: flip, scale and rotate about the
// exemplar centre, then place that centre at the destination centre plus
// (offset_x, offset_y).
struct PlacementSpec {
  std::string exemplar_id;
  double rotation_deg = 0.0;  // [0, 360)
  double scale = 1.0;         // [0.5, 2]
  bool flip_h = false;
  bool flip_v = false;
  int offset_x = 0;
  int offset_y = 0;
  int mask_dilation = 1;

  void validate() const;
  friend bool operator==(const PlacementSpec&, const PlacementSpec&) = default;
};

struct Placement {
  PlacementSpec spec;
  // Exemplar image resampled bilinearly onto the destination canvas. Pixels
  // outside the exemplar footprint hold the exemplar's mean skin colour.
  RasterImage resolved_source;
  // Nearest-neighbour resampled and dilated hair mask; never touches the
  // destination border ring.
  BinaryMask resolved_mask;
};

// Resolves only the mask. Throws MaskOutOfBounds when a mask pixel would land
// on the border ring or off the canvas, EmptyAfterTransform when nothing
// survives resampling.
BinaryMask transform_mask(const HairExemplar& ex, const PlacementSpec& spec, Size dest_size);

Placement transform_exemplar(const HairExemplar& ex, const PlacementSpec& spec, Size dest_size);

struct PlacementRanges {
  double scale_min = 0.5;
  double scale_max = 2.0;
  // Offsets are drawn uniformly from +-fraction * destination extent.
  double max_offset_fraction = 0.5;
  int mask_dilation = 1;

  void validate() const;
};

// Rejection-samples specs until the mask fits. Throws NoFeasiblePlacement
// after max_attempts failures.
PlacementSpec sample_placement(const HairExemplar& ex, const RasterImage& dest, Rng& rng, int max_attempts,
                               const PlacementRanges& ranges = {});

}  // namespace hairforge
