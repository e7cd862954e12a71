#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spdh/geometry.hpp"

namespace spdh {

/// 8-bit RGB raster for visualization output.
struct RgbImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> data;  // 3 * width * height, interleaved

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(3 * static_cast<size_t>(w) * h, 0) {}
  void set(int u, int v, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const size_t i = 3 * (static_cast<size_t>(v) * width + u);
    data[i] = r;
    data[i + 1] = g;
    data[i + 2] = b;
  }
};

// 16-bit grayscale PNG (the only accepted depth PNG encoding; 1 unit = 1 mm).
void write_png_gray16(const std::filesystem::path& path, const std::vector<std::uint16_t>& pixels,
                      int width, int height);
std::vector<std::uint16_t> read_png_gray16(const std::filesystem::path& path, int* width,
                                           int* height);

void write_png_rgb8(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_png_rgb8(const std::filesystem::path& path);

/// Depth file I/O. ".png": 16-bit grayscale, values rounded to whole
/// millimeters. Anything else: raw little-endian f32 grid with a 16-byte
/// header (magic "SPDHDPTH", u32 width, u32 height).
void save_depth(const std::filesystem::path& path, const DepthImage& depth);
DepthImage load_depth(const std::filesystem::path& path);

}  // namespace spdh
