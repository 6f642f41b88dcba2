#include "hairforge/image.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "hairforge/errors.hpp"

namespace hairforge {

namespace {

double clamp01(double v) {
  // NaN maps to 0 so the invariant survives pathological solver output.
  if (!(v >= 0.0)) return 0.0;
  return v > 1.0 ? 1.0 : v;
}

void check_extent(int width, int height) {
  if (width < 1 || height < 1) {
    throw DimensionMismatch("image dimensions must be positive, got " + std::to_string(width) + "x" +
                            std::to_string(height));
  }
}

void check_same(Size a, Size b) {
  if (a != b) throw DimensionMismatch("mask dimensions differ");
}

}  // namespace

Plane::Plane(int width, int height, double fill)
    : width_(width), height_(height), data_(Size{width, height}.area(), fill) {
  check_extent(width, height);
}

RasterImage::RasterImage(int width, int height, int channels, double fill)
    : RasterImage(width, height, channels,
                  std::vector<double>(Size{width, height}.area() * static_cast<std::size_t>(std::max(channels, 0)),
                                      fill)) {}

RasterImage::RasterImage(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_extent(width, height);
  if (channels != 1 && channels != 3) {
    throw UnsupportedFormat("images must have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (data_.size() != size().area() * static_cast<std::size_t>(channels)) {
    throw DimensionMismatch("image data length does not match width*height*channels");
  }
  for (double& v : data_) v = clamp01(v);
}

void RasterImage::set(int x, int y, int c, double v) { data_[offset(x, y, c)] = clamp01(v); }

Plane RasterImage::channel(int c) const {
  Plane out(width_, height_);
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = data_[i * static_cast<std::size_t>(channels_) + static_cast<std::size_t>(c)];
  }
  return out;
}

void RasterImage::set_channel(int c, const Plane& plane) {
  check_same(size(), plane.size());
  auto src = plane.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    data_[i * static_cast<std::size_t>(channels_) + static_cast<std::size_t>(c)] = clamp01(src[i]);
  }
}

RasterImage quantize(const RasterImage& img) {
  std::vector<double> data(img.data().begin(), img.data().end());
  for (double& v : data) v = static_cast<double>(round_half_away(v * 255.0)) / 255.0;
  return RasterImage(img.width(), img.height(), img.channels(), std::move(data));
}

BinaryMask::BinaryMask(int width, int height, bool fill)
    : width_(width), height_(height), bits_(Size{width, height}.area(), fill ? 1 : 0) {
  check_extent(width, height);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  check_extent(width, height);
  if (bits_.size() != size().area()) throw DimensionMismatch("mask bit count does not match width*height");
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::touches_border() const {
  for (int x = 0; x < width_; ++x) {
    if ((*this)(x, 0) || (*this)(x, height_ - 1)) return true;
  }
  for (int y = 0; y < height_; ++y) {
    if ((*this)(0, y) || (*this)(width_ - 1, y)) return true;
  }
  return false;
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out = *this;
  for (auto& b : out.bits_) b ^= 1;
  return out;
}

BinaryMask BinaryMask::operator|(const BinaryMask& other) const {
  check_same(size(), other.size());
  BinaryMask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] |= other.bits_[i];
  return out;
}

BinaryMask BinaryMask::operator&(const BinaryMask& other) const {
  check_same(size(), other.size());
  BinaryMask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] &= other.bits_[i];
  return out;
}

BinaryMask BinaryMask::operator-(const BinaryMask& other) const {
  check_same(size(), other.size());
  BinaryMask out = *this;
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] &= static_cast<std::uint8_t>(other.bits_[i] ^ 1);
  return out;
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
  check_same(size(), other.size());
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

GradientField gradient(const RasterImage& img) {
  GradientField g;
  g.width = img.width();
  g.height = img.height();
  g.channels = img.channels();
  const std::size_t n = img.data().size();
  g.gx.assign(n, 0.0);
  g.gy.assign(n, 0.0);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      for (int c = 0; c < g.channels; ++c) {
        const double v = img.at(x, y, c);
        if (x + 1 < g.width) g.gx[g.offset(x, y, c)] = img.at(x + 1, y, c) - v;
        if (y + 1 < g.height) g.gy[g.offset(x, y, c)] = img.at(x, y + 1, c) - v;
      }
    }
  }
  return g;
}

std::vector<Plane> divergence(const GradientField& field) {
  std::vector<Plane> out;
  out.reserve(static_cast<std::size_t>(field.channels));
  for (int c = 0; c < field.channels; ++c) {
    Plane div(field.width, field.height);
    for (int y = 0; y < field.height; ++y) {
      for (int x = 0; x < field.width; ++x) {
        double v = field.gx[field.offset(x, y, c)] + field.gy[field.offset(x, y, c)];
        if (x > 0) v -= field.gx[field.offset(x - 1, y, c)];
        if (y > 0) v -= field.gy[field.offset(x, y - 1, c)];
        div(x, y) = v;
      }
    }
    out.push_back(std::move(div));
  }
  return out;
}

MaskBoundary mask_boundary(const BinaryMask& mask) {
  MaskBoundary b{BinaryMask(mask.width(), mask.height()), BinaryMask(mask.width(), mask.height())};
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const bool in = mask(x, y);
      for (int k = 0; k < 4; ++k) {
        const bool neighbour = mask.get_or_false(x + kDx[k], y + kDy[k]);
        if (in && !neighbour) {
          b.inner.set(x, y, true);
          break;
        }
        if (!in && neighbour) {
          b.outer.set(x, y, true);
          break;
        }
      }
    }
  }
  return b;
}

}  // namespace hairforge
