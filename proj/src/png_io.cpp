#include "hairforge/png_io.hpp"

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <system_error>
#include <vector>

#include "hairforge/errors.hpp"

namespace hairforge {

namespace fs = std::filesystem;

namespace {

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> bytes;
};

// Releases libpng's simplified-API state on every exit path.
struct PngImageGuard {
  png_image image{};
  PngImageGuard() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImageGuard() { png_image_free(&image); }
  PngImageGuard(const PngImageGuard&) = delete;
  PngImageGuard& operator=(const PngImageGuard&) = delete;
};

Decoded decode(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw FileNotFound("no such file: " + path.string());

  PngImageGuard guard;
  png_image& image = guard.image;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw UnsupportedFormat(path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    throw UnsupportedFormat(path.string() + ": 16-bit PNGs are not supported");
  }

  const bool colour = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  const int stored = (colour ? 3 : 1) + (alpha ? 1 : 0);
  image.format = colour ? (alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB) : (alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY);

  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    throw UnsupportedFormat(path.string() + ": " + image.message);
  }

  Decoded out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.channels = colour ? 3 : 1;
  if (!alpha) {
    out.bytes = std::move(raw);
    return out;
  }
  const std::size_t pixels = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height);
  out.bytes.resize(pixels * static_cast<std::size_t>(out.channels));
  for (std::size_t i = 0; i < pixels; ++i) {
    const std::uint8_t* px = raw.data() + i * static_cast<std::size_t>(stored);
    if (px[stored - 1] != 255) {
      throw UnsupportedFormat(path.string() + ": transparent pixels are not supported");
    }
    for (int c = 0; c < out.channels; ++c) out.bytes[i * static_cast<std::size_t>(out.channels) + static_cast<std::size_t>(c)] = px[c];
  }
  return out;
}

void encode(const fs::path& path, int width, int height, int channels, const std::vector<std::uint8_t>& bytes) {
  std::error_code ec;
  const fs::path parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent, ec)) {
    throw IoError("output directory does not exist: " + parent.string());
  }
  fs::path tmp = path;
  tmp += ".tmp";

  PngImageGuard guard;
  png_image& image = guard.image;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, tmp.c_str(), 0, bytes.data(), 0, nullptr)) {
    fs::remove(tmp, ec);
    throw IoError("failed to write " + path.string() + ": " + image.message);
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("failed to move " + tmp.string() + " into place");
  }
}

}  // namespace

RasterImage load_image(const fs::path& path) {
  Decoded d = decode(path);
  std::vector<double> data(d.bytes.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = d.bytes[i] / 255.0;
  return RasterImage(d.width, d.height, d.channels, std::move(data));
}

void save_image(const RasterImage& img, const fs::path& path) {
  std::vector<std::uint8_t> bytes(img.data().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(round_half_away(img.data()[i] * 255.0));
  }
  encode(path, img.width(), img.height(), img.channels(), bytes);
}

BinaryMask load_mask(const fs::path& path) {
  Decoded d = decode(path);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.height), 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    for (int c = 0; c < d.channels; ++c) {
      if (d.bytes[i * static_cast<std::size_t>(d.channels) + static_cast<std::size_t>(c)] != 0) bits[i] = 1;
    }
  }
  return BinaryMask(d.width, d.height, std::move(bits));
}

void save_mask(const BinaryMask& mask, const fs::path& path) {
  std::vector<std::uint8_t> bytes(mask.bits().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.bits()[i] ? 255 : 0;
  encode(path, mask.width(), mask.height(), 1, bytes);
}

}  // namespace hairforge
