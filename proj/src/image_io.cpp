#include "spdh/image_io.hpp"

#include <png.h>

#include "spdh/binary_io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace spdh {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  throw Error(std::string("libpng: ") + (msg ? msg : "unknown error"));
}
void png_warn_fn(png_structp, png_const_charp) {}

}  // namespace

void write_png_gray16(const std::filesystem::path& path, const std::vector<std::uint16_t>& pixels,
                      int width, int height) {
  SPDH_REQUIRE(width > 0 && height > 0, "write_png_gray16: empty image");
  SPDH_REQUIRE(pixels.size() == static_cast<size_t>(width) * height,
               "write_png_gray16: pixel count mismatch");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  SPDH_REQUIRE(fp != nullptr, "cannot open for writing: ", path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                            png_warn_fn);
  SPDH_REQUIRE(png != nullptr, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }
  try {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(2 * static_cast<size_t>(width));
    for (int v = 0; v < height; ++v) {
      for (int u = 0; u < width; ++u) {
        const std::uint16_t px = pixels[static_cast<size_t>(v) * width + u];
        row[2 * u] = static_cast<std::uint8_t>(px >> 8);  // PNG is big-endian
        row[2 * u + 1] = static_cast<std::uint8_t>(px & 0xff);
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

std::vector<std::uint16_t> read_png_gray16(const std::filesystem::path& path, int* width,
                                           int* height) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  SPDH_REQUIRE(fp != nullptr, "cannot open: ", path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                           png_warn_fn);
  SPDH_REQUIRE(png != nullptr, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }
  std::vector<std::uint16_t> pixels;
  try {
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    SPDH_REQUIRE(color_type == PNG_COLOR_TYPE_GRAY && bit_depth == 16,
                 path.string(), ": expected 16-bit grayscale PNG (got color_type=", color_type,
                 " bit_depth=", bit_depth, ")");
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    pixels.resize(static_cast<size_t>(w) * h);
    std::vector<std::uint8_t> row(2 * static_cast<size_t>(w));
    for (int v = 0; v < h; ++v) {
      png_read_row(png, row.data(), nullptr);
      for (int u = 0; u < w; ++u)
        pixels[static_cast<size_t>(v) * w + u] =
            static_cast<std::uint16_t>((row[2 * u] << 8) | row[2 * u + 1]);
    }
    png_read_end(png, nullptr);
    *width = w;
    *height = h;
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

void write_png_rgb8(const std::filesystem::path& path, const RgbImage& img) {
  SPDH_REQUIRE(img.width > 0 && img.height > 0, "write_png_rgb8: empty image");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  SPDH_REQUIRE(fp != nullptr, "cannot open for writing: ", path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                            png_warn_fn);
  SPDH_REQUIRE(png != nullptr, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }
  try {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int v = 0; v < img.height; ++v)
      png_write_row(png, const_cast<png_bytep>(&img.data[3 * static_cast<size_t>(v) * img.width]));
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

RgbImage read_png_rgb8(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  SPDH_REQUIRE(fp != nullptr, "cannot open: ", path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn,
                                           png_warn_fn);
  SPDH_REQUIRE(png != nullptr, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }
  RgbImage img;
  try {
    png_init_io(png, fp.get());
    png_read_info(png, info);
    SPDH_REQUIRE(png_get_color_type(png, info) == PNG_COLOR_TYPE_RGB &&
                     png_get_bit_depth(png, info) == 8,
                 path.string(), ": expected 8-bit RGB PNG");
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    png_read_update_info(png, info);
    img.data.resize(3 * static_cast<size_t>(img.width) * img.height);
    for (int v = 0; v < img.height; ++v)
      png_read_row(png, &img.data[3 * static_cast<size_t>(v) * img.width], nullptr);
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

namespace {
constexpr char kDepthMagic[8] = {'S', 'P', 'D', 'H', 'D', 'P', 'T', 'H'};
}

void save_depth(const std::filesystem::path& path, const DepthImage& depth) {
  SPDH_REQUIRE(depth.width > 0 && depth.height > 0, "save_depth: empty image");
  if (path.extension() == ".png") {
    std::vector<std::uint16_t> px(depth.data.size());
    for (size_t i = 0; i < depth.data.size(); ++i) {
      float d = depth.data[i];
      if (!(d > 0.0f)) d = 0.0f;
      if (d > 65535.0f) d = 65535.0f;
      px[i] = static_cast<std::uint16_t>(std::lround(d));
    }
    write_png_gray16(path, px, depth.width, depth.height);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  SPDH_REQUIRE(out.good(), "cannot open for writing: ", path.string());
  out.write(kDepthMagic, 8);
  bin::write_le_u32(out, static_cast<std::uint32_t>(depth.width));
  bin::write_le_u32(out, static_cast<std::uint32_t>(depth.height));
  bin::write_le_f32(out, depth.data);
  SPDH_REQUIRE(out.good(), "write failed: ", path.string());
}

DepthImage load_depth(const std::filesystem::path& path) {
  if (path.extension() == ".png") {
    int w = 0, h = 0;
    const auto px = read_png_gray16(path, &w, &h);
    DepthImage depth(w, h);
    for (size_t i = 0; i < px.size(); ++i) depth.data[i] = static_cast<float>(px[i]);
    return depth;
  }
  std::ifstream in(path, std::ios::binary);
  SPDH_REQUIRE(in.good(), "cannot open: ", path.string());
  char magic[8];
  in.read(magic, 8);
  SPDH_REQUIRE(in.good() && std::memcmp(magic, kDepthMagic, 8) == 0,
               path.string(), ": not a raw depth file (bad magic)");
  const std::uint32_t w = bin::read_le_u32(in);
  const std::uint32_t h = bin::read_le_u32(in);
  SPDH_REQUIRE(w > 0 && h > 0 && w < (1u << 16) && h < (1u << 16),
               path.string(), ": implausible raw depth dimensions ", w, "x", h);
  DepthImage depth(static_cast<int>(w), static_cast<int>(h));
  bin::read_le_f32(in, depth.data);
  SPDH_REQUIRE(in.good(), path.string(), ": truncated raw depth file");
  return depth;
}

}  // namespace spdh
