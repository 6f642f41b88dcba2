#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hairforge/image.hpp"

namespace hairforge {

// Width of the exterior annulus used by bleed_delta.
inline constexpr int kBleedAnnulusWidth = 3;

struct SeamReport {
  double seam_energy = 0.0;
  double bleed_delta = 0.0;
  std::vector<double> seam_per_channel;
  std::vector<double> bleed_per_channel;
};

// Mean over 4-adjacent (mask, non-mask) pixel pairs of the squared intensity
// jump, summed over channels. Throws EmptyBoundary when there are no pairs.
double seam_energy(const RasterImage& img, const BinaryMask& mask);
std::vector<double> seam_energy_per_channel(const RasterImage& img, const BinaryMask& mask);

// Mean absolute per-channel difference between output and destination over
// dilate(mask, 3) minus mask. Throws EmptyAnnulus.
double bleed_delta(const RasterImage& output, const RasterImage& destination, const BinaryMask& mask);
std::vector<double> bleed_delta_per_channel(const RasterImage& output, const RasterImage& destination,
                                            const BinaryMask& mask);

SeamReport seam_report(const RasterImage& output, const RasterImage& destination, const BinaryMask& mask);

struct CropBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const CropBox&, const CropBox&) = default;
};

// Tight bounding box of the mask grown by `pad` and clipped to the image.
// Throws EmptyRegion for an empty mask.
CropBox crop_box(const BinaryMask& mask, int pad);

RasterImage crop(const RasterImage& img, const CropBox& box);

// Writes the padded mask crop of `output` to `path` and a sidecar
// `<path stem>.json` holding {x, y, width, height, source_image}.
CropBox export_crops(const RasterImage& output, const BinaryMask& mask, int pad, const std::filesystem::path& path,
                     const std::string& source_image = "");

}  // namespace hairforge
