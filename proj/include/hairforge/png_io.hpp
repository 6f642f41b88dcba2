#pragma once

#include <filesystem>

#include "hairforge/image.hpp"

namespace hairforge {

// Reads an 8-bit grayscale or RGB PNG; intensities become v/255.
// Low bit-depth grayscale and opaque palette images are expanded. Alpha
// channels are accepted only when fully opaque, and are dropped.
// Throws FileNotFound or UnsupportedFormat.
RasterImage load_image(const std::filesystem::path& path);

// Writes an 8-bit PNG with round(v*255) quantization. The file is written to
// a temporary sibling and renamed into place. Throws IoError.
void save_image(const RasterImage& img, const std::filesystem::path& path);

// Masks are grayscale PNGs: any nonzero byte loads as true (for colour files,
// any nonzero channel). Saved as 0 / 255.
BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

}  // namespace hairforge
