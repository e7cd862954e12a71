#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spdh/error.hpp"

namespace spdh {

/// Pinhole camera: u = fx*X/Z + cx, v = fy*Y/Z + cy. Units: pixels for the
/// intrinsics, millimeters for all 3D quantities. +X right, +Y down, +Z forward.
struct PinholeIntrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  void validate() const;

  /// Intrinsics after resampling the image to new_w x new_h.
  PinholeIntrinsics rescaled(int new_w, int new_h) const;
};

PinholeIntrinsics load_camera_json(const std::filesystem::path& path);
void save_camera_json(const std::filesystem::path& path, const PinholeIntrinsics& K);

/// One-channel metric depth grid. Z-depth in millimeters (distance to the
/// plane through the point parallel to the image plane, not ray length).
/// 0 is the "no return" sentinel.
struct DepthImage {
  int width = 0, height = 0;
  float max_range = 5000.0f;  // mm
  std::vector<float> data;    // row-major, height*width

  DepthImage() = default;
  DepthImage(int w, int h, float range = 5000.0f)
      : width(w), height(h), max_range(range), data(static_cast<size_t>(w) * h, 0.0f) {}

  float& at(int u, int v) { return data[static_cast<size_t>(v) * width + u]; }
  float at(int u, int v) const { return data[static_cast<size_t>(v) * width + u]; }
};

/// Per-pixel camera-frame 3D coordinates (mm), interleaved XYZ, with a
/// validity mask. Invalid pixels hold (0,0,0) and correspond exactly to
/// zero-depth sentinels.
struct XyzImage {
  int width = 0, height = 0;
  std::vector<float> xyz;            // 3 * width * height, interleaved
  std::vector<std::uint8_t> valid;   // width * height

  XyzImage() = default;
  XyzImage(int w, int h)
      : width(w), height(h), xyz(3 * static_cast<size_t>(w) * h, 0.0f),
        valid(static_cast<size_t>(w) * h, 0) {}

  Eigen::Vector3f at(int u, int v) const {
    const size_t i = 3 * (static_cast<size_t>(v) * width + u);
    return {xyz[i], xyz[i + 1], xyz[i + 2]};
  }
  bool is_valid(int u, int v) const { return valid[static_cast<size_t>(v) * width + u] != 0; }
  size_t valid_count() const;
};

/// Per-axis affine normalization bounds (mm).
struct NormalizationSpec {
  enum class Mode { kFixedBounds, kPerImageMinMax };
  Mode mode = Mode::kFixedBounds;
  double x_lo = -2000.0, x_hi = 2000.0;
  double y_lo = -2000.0, y_hi = 2000.0;
  double z_lo = 500.0, z_hi = 3380.0;

  void validate() const;
};

/// 3-channel grid in [0,1]; invalid pixels are 0 on all channels.
struct NormalizedXyz {
  int width = 0, height = 0;
  std::vector<float> data;  // 3 * width * height, interleaved
};

namespace detail {
// Shared per-pixel expressions so the serial reference and the OpenMP kernels
// stay bit-identical.
inline void pixel_to_xyz(int u, int v, float d, const PinholeIntrinsics& K, float* out) {
  out[0] = static_cast<float>((u - K.cx) * static_cast<double>(d) / K.fx);
  out[1] = static_cast<float>((v - K.cy) * static_cast<double>(d) / K.fy);
  out[2] = d;
}
inline float normalize_channel(float v, double lo, double hi) {
  double t = (static_cast<double>(v) - lo) / (hi - lo);
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  return static_cast<float>(t);
}
}  // namespace detail

/// Depth -> per-pixel 3D coordinates. X=(u-cx)d/fx, Y=(v-cy)d/fy, Z=d;
/// zero-depth pixels are masked invalid.
XyzImage backproject(const DepthImage& depth, const PinholeIntrinsics& K);

/// Single-pixel backprojection in double precision (the image variant stores
/// float32 and reprojects within half a pixel; this one inverts project() to
/// 1e-9 px).
Eigen::Vector3d backproject_pixel(double u, double v, double depth_mm,
                                  const PinholeIntrinsics& K);

/// Subpixel image coordinates of a camera-frame point. Throws if Z <= 0.
Eigen::Vector2d project(const Eigen::Vector3d& p_mm, const PinholeIntrinsics& K);

/// Per-channel affine map to [0,1] (clamped). Per-image min-max mode derives
/// bounds from valid pixels only.
NormalizedXyz normalize_xyz(const XyzImage& img, const NormalizationSpec& spec);

/// Nearest-neighbor resampling; no depth values are invented at boundaries.
DepthImage resize_depth(const DepthImage& depth, int new_w, int new_h);

}  // namespace spdh
