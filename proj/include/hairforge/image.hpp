#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hairforge {

struct Size {
  int width = 0;
  int height = 0;

  std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  friend bool operator==(const Size&, const Size&) = default;
};

// Half-away-from-zero rounding, used for quantization and radius rounding.
inline long round_half_away(double v) { return std::lround(v); }

// Single channel of real values. Unlike RasterImage, values are not clamped;
// solver inputs and outputs live here.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {width_, height_}; }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// H x W x C intensities in [0,1], row-major and channel-interleaved.
// Every write path clamps, so the [0,1] invariant always holds.
class RasterImage {
 public:
  RasterImage(int width, int height, int channels, double fill = 0.0);
  RasterImage(int width, int height, int channels, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  Size size() const { return {width_, height_}; }

  double at(int x, int y, int c) const { return data_[offset(x, y, c)]; }
  void set(int x, int y, int c, double v);

  std::span<const double> data() const { return data_; }

  Plane channel(int c) const;
  // Writes `plane` into channel `c`, clamping to [0,1].
  void set_channel(int c, const Plane& plane);

  std::size_t offset(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_;
  int height_;
  int channels_;
  std::vector<double> data_;
};

// Maps every intensity onto the 8-bit lattice v -> round(v*255)/255, i.e. the
// values a save/load round trip produces.
RasterImage quantize(const RasterImage& img);

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {width_, height_}; }

  bool operator()(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }

  // Out-of-image coordinates read as false.
  bool get_or_false(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_ && (*this)(x, y);
  }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::size_t popcount() const;
  bool empty() const { return popcount() == 0; }
  bool touches_border() const;

  BinaryMask complement() const;
  BinaryMask operator|(const BinaryMask& other) const;
  BinaryMask operator&(const BinaryMask& other) const;
  // Set difference: pixels in *this and not in other.
  BinaryMask operator-(const BinaryMask& other) const;
  bool subset_of(const BinaryMask& other) const;

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Forward differences per channel; gx is 0 on the last column and gy on the
// last row. Layout matches RasterImage (channel-interleaved).
struct GradientField {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> gx;
  std::vector<double> gy;

  std::size_t offset(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels) +
           static_cast<std::size_t>(c);
  }
};

GradientField gradient(const RasterImage& img);

// Backward-difference divergence of a gradient field, one Plane per channel.
// div(gradient(img)) equals the 5-point stencil sum(N4) - 4*center on interior
// pixels.
std::vector<Plane> divergence(const GradientField& field);

struct MaskBoundary {
  BinaryMask inner;
  BinaryMask outer;
};

// inner: mask pixels with a 4-neighbour outside the mask (the image edge
// counts as outside). outer: non-mask pixels with a 4-neighbour in the mask.
MaskBoundary mask_boundary(const BinaryMask& mask);

}  // namespace hairforge
