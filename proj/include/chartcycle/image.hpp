#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chartcycle {

/// Interleaved 8-bit RGB, row-major, no padding.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 255)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

  bool empty() const noexcept { return width == 0 || height == 0; }
  std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const {
    return &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
  }

  bool operator==(const Image&) const = default;
};

/// Any PNG colour type; alpha is composited over white. Throws SchemaError.
Image decode_png(std::string_view bytes);

/// Deterministic: fixed compression level and filter, no timestamps.
std::string encode_png(const Image& image);

/// Bilinear with edge clamping and pixel-centre alignment.
Image resize_bilinear(const Image& image, int width, int height);

}  // namespace chartcycle
