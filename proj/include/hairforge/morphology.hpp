#pragma once

#include <utility>
#include <vector>

#include "hairforge/image.hpp"

namespace hairforge {

// Lattice offsets of the discrete disk {(dx,dy) : dx^2 + dy^2 <= radius^2}.
std::vector<std::pair<int, int>> disk_offsets(int radius);

// Minkowski dilation by the discrete disk. Radius 0 is the identity.
BinaryMask dilate(const BinaryMask& mask, int radius);

// Erosion by the same disk. Pixels outside the image count as outside the
// mask, so a pixel survives only if its whole disk lies inside the image and
// inside the mask.
BinaryMask erode(const BinaryMask& mask, int radius);

// Mask with the outermost `width` pixel rings forced to false.
BinaryMask clear_border(const BinaryMask& mask, int width = 1);

}  // namespace hairforge
