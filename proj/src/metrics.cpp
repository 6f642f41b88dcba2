#include "hairforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hairforge/errors.hpp"
#include "hairforge/morphology.hpp"
#include "hairforge/png_io.hpp"

namespace hairforge {

namespace {

void require_size(Size a, Size b, const char* what) {
  if (a != b) throw DimensionMismatch(std::string(what) + ": dimensions differ");
}

}  // namespace

std::vector<double> seam_energy_per_channel(const RasterImage& img, const BinaryMask& mask) {
  require_size(img.size(), mask.size(), "seam_energy");
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  std::vector<double> sums(static_cast<std::size_t>(img.channels()), 0.0);
  std::size_t pairs = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (nx < 0 || ny < 0 || nx >= mask.width() || ny >= mask.height() || mask(nx, ny)) continue;
        ++pairs;
        for (int c = 0; c < img.channels(); ++c) {
          const double d = img.at(x, y, c) - img.at(nx, ny, c);
          sums[static_cast<std::size_t>(c)] += d * d;
        }
      }
    }
  }
  if (pairs == 0) throw EmptyBoundary("seam_energy: mask has no boundary pairs");
  for (double& s : sums) s /= static_cast<double>(pairs);
  return sums;
}

double seam_energy(const RasterImage& img, const BinaryMask& mask) {
  const auto per_channel = seam_energy_per_channel(img, mask);
  double total = 0.0;
  for (double v : per_channel) total += v;
  return total;
}

std::vector<double> bleed_delta_per_channel(const RasterImage& output, const RasterImage& destination,
                                            const BinaryMask& mask) {
  require_size(output.size(), destination.size(), "bleed_delta");
  require_size(output.size(), mask.size(), "bleed_delta");
  if (output.channels() != destination.channels()) throw DimensionMismatch("bleed_delta: channel counts differ");
  const BinaryMask annulus = dilate(mask, kBleedAnnulusWidth) - mask;
  const std::size_t count = annulus.popcount();
  if (count == 0) throw EmptyAnnulus("bleed_delta: annulus is empty");
  std::vector<double> sums(static_cast<std::size_t>(output.channels()), 0.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!annulus(x, y)) continue;
      for (int c = 0; c < output.channels(); ++c) {
        sums[static_cast<std::size_t>(c)] += std::abs(output.at(x, y, c) - destination.at(x, y, c));
      }
    }
  }
  for (double& s : sums) s /= static_cast<double>(count);
  return sums;
}

double bleed_delta(const RasterImage& output, const RasterImage& destination, const BinaryMask& mask) {
  const auto per_channel = bleed_delta_per_channel(output, destination, mask);
  double total = 0.0;
  for (double v : per_channel) total += v;
  return total / static_cast<double>(per_channel.size());
}

SeamReport seam_report(const RasterImage& output, const RasterImage& destination, const BinaryMask& mask) {
  SeamReport report;
  report.seam_per_channel = seam_energy_per_channel(output, mask);
  report.bleed_per_channel = bleed_delta_per_channel(output, destination, mask);
  for (double v : report.seam_per_channel) report.seam_energy += v;
  for (double v : report.bleed_per_channel) report.bleed_delta += v;
  report.bleed_delta /= static_cast<double>(report.bleed_per_channel.size());
  return report;
}

CropBox crop_box(const BinaryMask& mask, int pad) {
  int min_x = mask.width();
  int min_y = mask.height();
  int max_x = -1;
  int max_y = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }
  if (max_x < 0) throw EmptyRegion("crop_box: mask is empty");
  pad = std::max(pad, 0);
  const int x0 = std::max(0, min_x - pad);
  const int y0 = std::max(0, min_y - pad);
  const int x1 = std::min(mask.width() - 1, max_x + pad);
  const int y1 = std::min(mask.height() - 1, max_y + pad);
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

RasterImage crop(const RasterImage& img, const CropBox& box) {
  RasterImage out(box.width, box.height, img.channels());
  for (int y = 0; y < box.height; ++y) {
    for (int x = 0; x < box.width; ++x) {
      for (int c = 0; c < img.channels(); ++c) out.set(x, y, c, img.at(box.x + x, box.y + y, c));
    }
  }
  return out;
}

CropBox export_crops(const RasterImage& output, const BinaryMask& mask, int pad, const std::filesystem::path& path,
                     const std::string& source_image) {
  require_size(output.size(), mask.size(), "export_crops");
  const CropBox box = crop_box(mask, pad);
  save_image(crop(output, box), path);

  const nlohmann::json sidecar = {
      {"x", box.x}, {"y", box.y}, {"width", box.width}, {"height", box.height}, {"source_image", source_image}};
  std::filesystem::path json_path = path;
  json_path.replace_extension(".json");
  std::ofstream out(json_path);
  out << sidecar.dump() << '\n';
  if (!out) throw IoError("failed to write crop sidecar " + json_path.string());
  return box;
}

}  // namespace hairforge
